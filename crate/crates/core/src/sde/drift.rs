//! Drift and noise coefficients of the stochastic HP, Hamiltonian (Langevin)
//! and metric-velocity equations, classical and fractional.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::Result;
use crate::frackernel::FracWeight;
use crate::linalg;
use crate::systems::{christoffel, hamiltonian_gradient, Lagrangian, Metric, MetricModel, Potential, State};

/// Right-hand side of a (q, p) system: `dq = dq·ds`, `dp = dp·ds + noise·dw`.
#[derive(Debug, Clone, PartialEq)]
pub struct Drift {
    pub dq: Vec<f64>,
    pub dp: Vec<f64>,
    /// Coefficient of the scalar Wiener increment in the momentum balance.
    pub noise: Vec<f64>,
}

/// Right-hand side of a (q, v) system: `dq = dq·ds`, `dv = dv·ds + noise·dw`.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityDrift {
    pub dq: Vec<f64>,
    pub dv: Vec<f64>,
    pub noise: Vec<f64>,
}

/// Sign of the `h(s,t)·v` term in the fractional metric-velocity equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FrictionSign {
    /// dv = −(Γvv − h·v) ds, i.e. `+h·v` in the drift.
    #[default]
    AntiDamping,
    /// dv = −(Γvv + h·v) ds, matching the momentum-form correction `−h·p`.
    Damping,
}

/// dq = v, dp = ∂L/∂q, noise = ∂γ/∂q.
pub fn hp_drift_classical<M: Lagrangian + ?Sized>(model: &M, state: &State) -> Drift {
    let n = model.dim();
    let mut dp = vec![0.0; n];
    let mut noise = vec![0.0; n];
    model.dl_dq(state.s, &state.q, &state.v, &mut dp);
    model.dnoise_dq(&state.q, &mut noise);
    Drift {
        dq: state.v.clone(),
        dp,
        noise,
    }
}

/// dq = v, dp = ∂L/∂q − p·h(s,t), noise = ∂γ/∂q.
pub fn hp_drift_fractional<M: Lagrangian + ?Sized>(
    model: &M,
    weight: &FracWeight,
    state: &State,
) -> Result<Drift> {
    let correction = weight.h(state.s)?;
    let mut drift = hp_drift_classical(model, state);
    subtract_friction(&mut drift.dp, &state.p, correction);
    Ok(drift)
}

/// dq = ∂H/∂p, dp = −∂H/∂q (− p·h(s,t) when a weight is given), noise = ∂γ/∂q.
pub fn ham_drift<M: Lagrangian + ?Sized>(
    model: &M,
    weight: Option<&FracWeight>,
    s: f64,
    q: &[f64],
    p: &[f64],
) -> Result<Drift> {
    let n = model.dim();
    let correction = weight.map(|w| w.h(s)).transpose()?;
    let mut dh_dq = vec![0.0; n];
    let mut dq = vec![0.0; n];
    hamiltonian_gradient(model, s, q, p, &mut dh_dq, &mut dq)?;
    let mut dp: Vec<f64> = dh_dq.iter().map(|x| -x).collect();
    if let Some(c) = correction {
        subtract_friction(&mut dp, p, c);
    }
    let mut noise = vec![0.0; n];
    model.dnoise_dq(q, &mut noise);
    Ok(Drift { dq, dp, noise })
}

fn subtract_friction(dp: &mut [f64], p: &[f64], correction: f64) {
    for (d, pi) in dp.iter_mut().zip(p) {
        *d -= pi * correction;
    }
}

/// Geodesic-type velocity equation for `L = ½g_kl v^k v^l`:
/// dq = v, dv = −Γ^i_jk v^j v^k (± h(s,t)·v when fractional), noise = g⁻¹∂γ/∂q.
pub fn metric_velocity_drift<G: Metric, N: Potential>(
    model: &MetricModel<G, N>,
    weight: Option<&FracWeight>,
    friction: FrictionSign,
    state: &State,
) -> Result<VelocityDrift> {
    let n = model.dim();
    let (q, v) = (&state.q, &state.v);
    let gamma = christoffel(&model.metric, q)?;
    let mut dv = vec![0.0; n];
    for (i, d) in dv.iter_mut().enumerate() {
        let mut acc = 0.0;
        for j in 0..n {
            for k in 0..n {
                acc += gamma[i * n * n + j * n + k] * v[j] * v[k];
            }
        }
        *d = -acc;
    }
    if let Some(w) = weight {
        let c = w.h(state.s)?;
        let signed = match friction {
            FrictionSign::AntiDamping => c,
            FrictionSign::Damping => -c,
        };
        for (d, vi) in dv.iter_mut().zip(v) {
            *d += signed * vi;
        }
    }
    let ginv = model.inverse_metric(q)?;
    let mut grad = vec![0.0; n];
    model.dnoise_dq(q, &mut grad);
    let mut noise = vec![0.0; n];
    linalg::mat_vec(n, &ginv, &grad, &mut noise);
    Ok(VelocityDrift {
        dq: v.clone(),
        dv,
        noise,
    })
}
