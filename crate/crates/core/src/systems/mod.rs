//! Mechanical system models on ℝⁿ charts and the Legendre transform.
//!
//! A model is a time-dependent Lagrangian `L(s, q, v)` together with the
//! scalar noise potential `γ(q)` whose gradient multiplies the Wiener
//! increment in the momentum balance.

mod builtin;
mod metric;
mod numeric;

use alloc::vec;
use alloc::vec::Vec;

pub use builtin::{Discounted, Elementary, FnPotential, Natural, Potential, Samuelson, Separable};
pub use metric::{
    christoffel, validate_metric_at, ConstantDiagonal, Euclidean, Metric, MetricModel, Polar,
};
pub use numeric::{NumericModel, FD_REL_STEP, HESSIAN_REL_STEP};

use crate::error::{Error, Result};
use crate::linalg;

/// Newton tolerance on the momentum residual, relative to max(1, ‖p‖∞).
pub const LEGENDRE_TOL: f64 = 1e-12;
pub const LEGENDRE_MAX_ITER: usize = 50;
/// A velocity Hessian whose σ_min/σ_max falls below this is treated as degenerate.
pub const HYPERREGULAR_RCOND: f64 = 1e-6;

/// A Lagrangian system with a scalar noise potential.
///
/// All vector outputs are written into caller-provided slices of length
/// [`dim`](Lagrangian::dim); matrices are row-major `n×n`.
pub trait Lagrangian {
    fn dim(&self) -> usize;

    fn name(&self) -> &str {
        "custom"
    }

    fn lagrangian(&self, s: f64, q: &[f64], v: &[f64]) -> f64;
    fn dl_dq(&self, s: f64, q: &[f64], v: &[f64], out: &mut [f64]);
    fn dl_dv(&self, s: f64, q: &[f64], v: &[f64], out: &mut [f64]);

    /// γ(q)
    fn noise_potential(&self, q: &[f64]) -> f64;
    /// ∂γ/∂q
    fn dnoise_dq(&self, q: &[f64], out: &mut [f64]);

    /// ∂²L/∂v∂v. Returns `false` when the model does not supply it.
    fn hess_vv(&self, _s: f64, _q: &[f64], _v: &[f64], _out: &mut [f64]) -> bool {
        false
    }

    /// Analytic inverse Legendre map `p ↦ v`, if the model has one.
    fn velocity_of_momentum(
        &self,
        _s: f64,
        _q: &[f64],
        _p: &[f64],
        _out: &mut [f64],
    ) -> Option<Result<()>> {
        None
    }

    /// Analytic `(∂H/∂q, ∂H/∂p)`. Returns `false` when not supplied, in which
    /// case the Legendre identities are used.
    fn hamiltonian_gradient(
        &self,
        _s: f64,
        _q: &[f64],
        _p: &[f64],
        _dh_dq: &mut [f64],
        _dh_dp: &mut [f64],
    ) -> bool {
        false
    }

    /// True when the partial derivatives are finite-difference approximations.
    fn numeric_partials(&self) -> bool {
        false
    }
}

impl<T: Lagrangian + ?Sized> Lagrangian for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn name(&self) -> &str {
        (**self).name()
    }
    fn lagrangian(&self, s: f64, q: &[f64], v: &[f64]) -> f64 {
        (**self).lagrangian(s, q, v)
    }
    fn dl_dq(&self, s: f64, q: &[f64], v: &[f64], out: &mut [f64]) {
        (**self).dl_dq(s, q, v, out)
    }
    fn dl_dv(&self, s: f64, q: &[f64], v: &[f64], out: &mut [f64]) {
        (**self).dl_dv(s, q, v, out)
    }
    fn noise_potential(&self, q: &[f64]) -> f64 {
        (**self).noise_potential(q)
    }
    fn dnoise_dq(&self, q: &[f64], out: &mut [f64]) {
        (**self).dnoise_dq(q, out)
    }
    fn hess_vv(&self, s: f64, q: &[f64], v: &[f64], out: &mut [f64]) -> bool {
        (**self).hess_vv(s, q, v, out)
    }
    fn velocity_of_momentum(&self, s: f64, q: &[f64], p: &[f64], out: &mut [f64]) -> Option<Result<()>> {
        (**self).velocity_of_momentum(s, q, p, out)
    }
    fn hamiltonian_gradient(&self, s: f64, q: &[f64], p: &[f64], dh_dq: &mut [f64], dh_dp: &mut [f64]) -> bool {
        (**self).hamiltonian_gradient(s, q, p, dh_dq, dh_dp)
    }
    fn numeric_partials(&self) -> bool {
        (**self).numeric_partials()
    }
}

/// A point `(s, q, v, p)` of a curve in the Hamilton–Pontryagin path space.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub s: f64,
    pub q: Vec<f64>,
    pub v: Vec<f64>,
    pub p: Vec<f64>,
}

impl State {
    pub fn is_finite(&self) -> bool {
        self.s.is_finite()
            && self
                .q
                .iter()
                .chain(&self.v)
                .chain(&self.p)
                .all(|x| x.is_finite())
    }
}

/// p = ∂L/∂v
pub fn legendre_p<M: Lagrangian + ?Sized>(model: &M, s: f64, q: &[f64], v: &[f64]) -> Vec<f64> {
    let mut p = vec![0.0; model.dim()];
    model.dl_dv(s, q, v, &mut p);
    p
}

/// Inverse Legendre map `p ↦ v`.
///
/// Uses the model's analytic inverse when available, otherwise a damped
/// Newton iteration on `v ↦ ∂L/∂v − p` started from `v = p`.
pub fn invert_legendre<M: Lagrangian + ?Sized>(
    model: &M,
    s: f64,
    q: &[f64],
    p: &[f64],
    out: &mut [f64],
) -> Result<()> {
    if let Some(res) = model.velocity_of_momentum(s, q, p, out) {
        return res;
    }
    newton_legendre(model, s, q, p, out)
}

fn newton_legendre<M: Lagrangian + ?Sized>(
    model: &M,
    s: f64,
    q: &[f64],
    p: &[f64],
    out: &mut [f64],
) -> Result<()> {
    let n = model.dim();
    let fail = |iterations| Error::Hyperregularity { s, iterations };
    let tol = LEGENDRE_TOL * p.iter().fold(1.0_f64, |m, x| m.max(x.abs()));
    let mut hess = vec![0.0; n * n];
    let mut resid = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut trial_resid = vec![0.0; n];

    out.copy_from_slice(p);
    let residual = |v: &[f64], r: &mut [f64]| {
        model.dl_dv(s, q, v, r);
        for (ri, pi) in r.iter_mut().zip(p) {
            *ri -= pi;
        }
        r.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    };
    let mut norm = residual(out, &mut resid);
    for iter in 0..LEGENDRE_MAX_ITER {
        if norm <= tol {
            return Ok(());
        }
        if !model.hess_vv(s, q, out, &mut hess) {
            return Err(Error::NoLegendreInverse);
        }
        let step = linalg::solve(n, &hess, &resid).ok_or_else(|| fail(iter))?;
        let mut damping = 1.0;
        loop {
            for i in 0..n {
                trial[i] = out[i] - damping * step[i];
            }
            let trial_norm = residual(&trial, &mut trial_resid);
            if trial_norm < norm || damping < 1e-6 {
                out.copy_from_slice(&trial);
                resid.copy_from_slice(&trial_resid);
                norm = trial_norm;
                break;
            }
            damping *= 0.5;
        }
    }
    if norm <= tol {
        Ok(())
    } else {
        Err(fail(LEGENDRE_MAX_ITER))
    }
}

/// H(s, q, p) = ⟨p, v*⟩ − L(s, q, v*) with v* the inverse Legendre image of p.
pub fn hamiltonian<M: Lagrangian + ?Sized>(model: &M, s: f64, q: &[f64], p: &[f64]) -> Result<f64> {
    let mut v = vec![0.0; model.dim()];
    invert_legendre(model, s, q, p, &mut v)?;
    Ok(linalg::dot(p, &v) - model.lagrangian(s, q, &v))
}

/// `(∂H/∂q, ∂H/∂p)`.
///
/// Without an analytic gradient from the model this uses ∂H/∂p = v* and
/// ∂H/∂q = −∂L/∂q(s, q, v*).
pub fn hamiltonian_gradient<M: Lagrangian + ?Sized>(
    model: &M,
    s: f64,
    q: &[f64],
    p: &[f64],
    dh_dq: &mut [f64],
    dh_dp: &mut [f64],
) -> Result<()> {
    if model.hamiltonian_gradient(s, q, p, dh_dq, dh_dp) {
        return Ok(());
    }
    invert_legendre(model, s, q, p, dh_dp)?;
    model.dl_dq(s, q, dh_dp, dh_dq);
    for x in dh_dq.iter_mut() {
        *x = -*x;
    }
    Ok(())
}

/// det(∂²L/∂v∂v), or `None` when the model supplies no Hessian.
pub fn hessian_determinant<M: Lagrangian + ?Sized>(model: &M, s: f64, q: &[f64], v: &[f64]) -> Option<f64> {
    let n = model.dim();
    let mut hess = vec![0.0; n * n];
    model
        .hess_vv(s, q, v, &mut hess)
        .then(|| linalg::determinant(n, &hess))
}

/// Hyperregularity at one point: the velocity Hessian exists and is
/// numerically non-singular (σ_min > HYPERREGULAR_RCOND·max(1, σ_max)).
pub fn is_hyperregular_at<M: Lagrangian + ?Sized>(model: &M, s: f64, q: &[f64], v: &[f64]) -> bool {
    let n = model.dim();
    let mut hess = vec![0.0; n * n];
    if !model.hess_vv(s, q, v, &mut hess) {
        return false;
    }
    let (min, max) = linalg::singular_value_range(n, &hess);
    min > HYPERREGULAR_RCOND * max.max(1.0)
}

#[cfg(test)]
mod tests;
