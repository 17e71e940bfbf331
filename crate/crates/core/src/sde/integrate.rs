use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use super::drift::{ham_drift, hp_drift_classical, hp_drift_fractional, metric_velocity_drift, Drift, FrictionSign};
use super::wiener::WienerPath;
use crate::error::{param, Error, Result};
use crate::frackernel::FracWeight;
use crate::systems::{invert_legendre, legendre_p, Lagrangian, Metric, MetricModel, Potential, State};

/// Which form of the equations of motion is integrated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Formulation {
    /// Stochastic HP equations, advancing (q, p) and recovering v by the inverse Legendre map.
    HpClassical,
    /// Stochastic Hamilton (Langevin) equations.
    HamClassical,
    HpFractional,
    HamFractional,
    /// Metric Lagrangians only: geodesic-type equation in (q, v).
    VelocityClassical,
    VelocityFractional,
}

impl Formulation {
    pub const ALL: [Formulation; 6] = [
        Formulation::HpClassical,
        Formulation::HamClassical,
        Formulation::HpFractional,
        Formulation::HamFractional,
        Formulation::VelocityClassical,
        Formulation::VelocityFractional,
    ];

    pub fn is_fractional(self) -> bool {
        matches!(
            self,
            Formulation::HpFractional | Formulation::HamFractional | Formulation::VelocityFractional
        )
    }

    pub fn is_velocity_form(self) -> bool {
        matches!(self, Formulation::VelocityClassical | Formulation::VelocityFractional)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Formulation::HpClassical => "hp-classical",
            Formulation::HamClassical => "ham-classical",
            Formulation::HpFractional => "hp-fractional",
            Formulation::HamFractional => "ham-fractional",
            Formulation::VelocityClassical => "velocity-classical",
            Formulation::VelocityFractional => "velocity-fractional",
        }
    }

    /// The non-fractional counterpart.
    pub fn classical(self) -> Formulation {
        match self {
            Formulation::HpFractional => Formulation::HpClassical,
            Formulation::HamFractional => Formulation::HamClassical,
            Formulation::VelocityFractional => Formulation::VelocityClassical,
            other => other,
        }
    }
}

impl fmt::Display for Formulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Formulation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Formulation::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| Error::Parameter {
                name: "formulation",
                reason: format!("unknown formulation `{s}`"),
            })
    }
}

/// Initial velocity or momentum; the other is obtained through the Legendre map.
#[derive(Debug, Clone, PartialEq)]
pub enum Initial {
    Velocity(Vec<f64>),
    Momentum(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub formulation: Formulation,
    /// Required by the fractional formulations, ignored otherwise.
    pub weight: Option<FracWeight>,
    pub t0: f64,
    pub h: f64,
    pub steps: usize,
    pub seed: u64,
    /// Noise stream; ensemble member `m` uses stream `m`.
    pub stream: u64,
    pub q0: Vec<f64>,
    pub initial: Initial,
    pub friction: FrictionSign,
}

impl SimConfig {
    pub fn new(formulation: Formulation, h: f64, steps: usize, q0: Vec<f64>, initial: Initial) -> Self {
        SimConfig {
            formulation,
            weight: None,
            t0: 0.0,
            h,
            steps,
            seed: 0,
            stream: 0,
            q0,
            initial,
            friction: FrictionSign::default(),
        }
    }

    pub fn with_weight(mut self, weight: FracWeight) -> Self {
        self.weight = Some(weight);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn t_end(&self) -> f64 {
        time_at(self.t0, self.h, self.steps)
    }

    /// The same configuration on a grid `factor` times finer over the same span.
    pub fn refined(&self, factor: usize) -> SimConfig {
        SimConfig {
            h: self.h / factor as f64,
            steps: self.steps * factor,
            ..self.clone()
        }
    }

    /// Checks every invariant against a model of dimension `dim`.
    pub fn validate(&self, dim: usize) -> Result<()> {
        if !(self.h > 0.0) || !self.h.is_finite() {
            return param("h", "step must be positive and finite");
        }
        if self.steps == 0 {
            return param("steps", "at least one step is required");
        }
        if !self.t0.is_finite() {
            return param("t0", "must be finite");
        }
        if self.q0.len() != dim || self.q0.iter().any(|x| !x.is_finite()) {
            return param("q0", format!("expected {dim} finite components"));
        }
        let (name, init) = match &self.initial {
            Initial::Velocity(v) => ("v0", v),
            Initial::Momentum(p) => ("p0", p),
        };
        if init.len() != dim || init.iter().any(|x| !x.is_finite()) {
            return param(name, format!("expected {dim} finite components"));
        }
        if self.formulation.is_fractional() {
            let Some(w) = &self.weight else {
                return param("weight", "fractional formulations need a fractional weight");
            };
            if !w.clears_interval(self.t0, self.t_end()) {
                return param(
                    "t_obs",
                    format!(
                        "observer time {} lies within {} of the simulated interval [{}, {}]",
                        w.t_obs,
                        w.sing_eps,
                        self.t0,
                        self.t_end()
                    ),
                );
            }
            let (z_lo, z_hi) = (self.t0 - w.t_obs, self.t_end() - w.t_obs);
            w.profile.check_range(z_lo.min(z_hi), z_lo.max(z_hi))?;
        }
        Ok(())
    }

    fn check_path(&self, path: &WienerPath) -> Result<()> {
        if path.steps() != self.steps || path.h.to_bits() != self.h.to_bits() {
            return Err(Error::GridMismatch(format!(
                "path has {} steps of {}, configuration has {} steps of {}",
                path.steps(),
                path.h,
                self.steps,
                self.h
            )));
        }
        Ok(())
    }

    /// The Wiener path selected by `seed` and `stream`.
    pub fn wiener_path(&self) -> Result<WienerPath> {
        WienerPath::generate(self.seed, self.stream, self.h, self.steps)
    }
}

/// s_n = t₀ + n·h with a single rounding.
pub fn time_at(t0: f64, h: f64, n: usize) -> f64 {
    libm::fma(n as f64, h, t0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunMeta {
    pub formulation: Formulation,
    pub seed: u64,
    pub stream: u64,
    pub system: String,
}

/// A sampled solution on the grid `s_n = t₀ + n·h`, n = 0..=N.
///
/// `q`, `v`, `p` are stored row by row, `dim` values per grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub dim: usize,
    pub t0: f64,
    pub h: f64,
    pub times: Vec<f64>,
    pub q: Vec<f64>,
    pub v: Vec<f64>,
    pub p: Vec<f64>,
    /// ΔW_n for n = 0..N−1.
    pub dw: Vec<f64>,
    pub meta: RunMeta,
}

impl Trajectory {
    fn with_capacity(dim: usize, config: &SimConfig, system: &str) -> Self {
        let points = config.steps + 1;
        Trajectory {
            dim,
            t0: config.t0,
            h: config.h,
            times: Vec::with_capacity(points),
            q: Vec::with_capacity(points * dim),
            v: Vec::with_capacity(points * dim),
            p: Vec::with_capacity(points * dim),
            dw: Vec::with_capacity(config.steps),
            meta: RunMeta {
                formulation: config.formulation,
                seed: config.seed,
                stream: config.stream,
                system: system.to_string(),
            },
        }
    }

    fn push(&mut self, s: f64, q: &[f64], v: &[f64], p: &[f64]) {
        self.times.push(s);
        self.q.extend_from_slice(q);
        self.v.extend_from_slice(v);
        self.p.extend_from_slice(p);
    }

    /// Number of steps N (the trajectory has N + 1 points).
    pub fn steps(&self) -> usize {
        self.times.len().saturating_sub(1)
    }

    pub fn q_at(&self, n: usize) -> &[f64] {
        &self.q[n * self.dim..(n + 1) * self.dim]
    }

    pub fn v_at(&self, n: usize) -> &[f64] {
        &self.v[n * self.dim..(n + 1) * self.dim]
    }

    pub fn p_at(&self, n: usize) -> &[f64] {
        &self.p[n * self.dim..(n + 1) * self.dim]
    }

    pub fn state_at(&self, n: usize) -> State {
        State {
            s: self.times[n],
            q: self.q_at(n).to_vec(),
            v: self.v_at(n).to_vec(),
            p: self.p_at(n).to_vec(),
        }
    }
}

fn initial_state<M: Lagrangian + ?Sized>(model: &M, config: &SimConfig) -> Result<State> {
    let s = config.t0;
    let q = config.q0.clone();
    let (v, p) = match &config.initial {
        Initial::Velocity(v) => (v.clone(), legendre_p(model, s, &q, v)),
        Initial::Momentum(p) => {
            let mut v = vec![0.0; model.dim()];
            invert_legendre(model, s, &q, p, &mut v)?;
            (v, p.clone())
        }
    };
    Ok(State { s, q, v, p })
}

/// Euler–Maruyama for the HP and Hamiltonian formulations (Itô, left-point noise):
///
/// ```text
/// q_{n+1} = q_n + h·dq(s_n, x_n)
/// p_{n+1} = p_n + h·dp(s_n, x_n) + noise(q_n)·ΔW_n
/// v_{n+1} = (∂L/∂v)⁻¹(s_{n+1}, q_{n+1}, p_{n+1})
/// ```
pub fn euler_maruyama<M: Lagrangian + ?Sized>(
    model: &M,
    config: &SimConfig,
    path: &WienerPath,
) -> Result<Trajectory> {
    integrate_with(model, config, path, |state| {
        drift_for(model, config, state)
    })
}

/// Drift of `config.formulation` at `state` (not the velocity forms).
pub fn drift_for<M: Lagrangian + ?Sized>(model: &M, config: &SimConfig, state: &State) -> Result<Drift> {
    match config.formulation {
        Formulation::HpClassical => Ok(hp_drift_classical(model, state)),
        Formulation::HpFractional => hp_drift_fractional(model, weight_of(config)?, state),
        Formulation::HamClassical => ham_drift(model, None, state.s, &state.q, &state.p),
        Formulation::HamFractional => {
            ham_drift(model, Some(weight_of(config)?), state.s, &state.q, &state.p)
        }
        Formulation::VelocityClassical | Formulation::VelocityFractional => param(
            "formulation",
            "velocity formulations need a metric model; use euler_maruyama_metric",
        ),
    }
}

fn weight_of(config: &SimConfig) -> Result<&FracWeight> {
    config.weight.as_ref().ok_or(Error::Parameter {
        name: "weight",
        reason: "fractional formulations need a fractional weight".into(),
    })
}

/// The (q, p) Euler–Maruyama loop with a caller-supplied drift.
///
/// `drift` sees the state at `s_n`; the loop handles the noise increment, the
/// Legendre recovery of v and the non-finite abort.
pub fn integrate_with<M, F>(model: &M, config: &SimConfig, path: &WienerPath, mut drift: F) -> Result<Trajectory>
where
    M: Lagrangian + ?Sized,
    F: FnMut(&State) -> Result<Drift>,
{
    let n = model.dim();
    config.validate(n)?;
    config.check_path(path)?;
    if config.formulation.is_velocity_form() {
        return param("formulation", "velocity formulations need a metric model");
    }
    let mut traj = Trajectory::with_capacity(n, config, model.name());
    let mut state = initial_state(model, config)?;
    if !state.is_finite() {
        return Err(Error::NonFinite { step: 0 });
    }
    traj.push(state.s, &state.q, &state.v, &state.p);

    for (step, &dw) in path.increments.iter().enumerate() {
        let d = drift(&state)?;
        for i in 0..n {
            state.q[i] += config.h * d.dq[i];
            state.p[i] += config.h * d.dp[i] + d.noise[i] * dw;
        }
        state.s = time_at(config.t0, config.h, step + 1);
        if !state.q.iter().chain(&state.p).all(|x| x.is_finite()) {
            return Err(Error::NonFinite { step: step + 1 });
        }
        invert_legendre(model, state.s, &state.q, &state.p, &mut state.v)?;
        if !state.is_finite() {
            return Err(Error::NonFinite { step: step + 1 });
        }
        traj.dw.push(dw);
        traj.push(state.s, &state.q, &state.v, &state.p);
    }
    Ok(traj)
}

/// Euler–Maruyama for the velocity form of a metric Lagrangian:
/// `q_{n+1} = q_n + h·v_n`, `v_{n+1} = v_n + h·dv + g⁻¹∂γ/∂q·ΔW_n`; p = g·v is recorded.
pub fn euler_maruyama_metric<G: Metric, N: Potential>(
    model: &MetricModel<G, N>,
    config: &SimConfig,
    path: &WienerPath,
) -> Result<Trajectory> {
    let n = model.dim();
    config.validate(n)?;
    config.check_path(path)?;
    if !config.formulation.is_velocity_form() {
        return param("formulation", "expected velocity-classical or velocity-fractional");
    }
    let weight = if config.formulation.is_fractional() {
        Some(weight_of(config)?)
    } else {
        None
    };
    let mut traj = Trajectory::with_capacity(n, config, model.name());
    let mut state = initial_state(model, config)?;
    traj.push(state.s, &state.q, &state.v, &state.p);

    for (step, &dw) in path.increments.iter().enumerate() {
        let d = metric_velocity_drift(model, weight, config.friction, &state)?;
        for i in 0..n {
            state.q[i] += config.h * d.dq[i];
            state.v[i] += config.h * d.dv[i] + d.noise[i] * dw;
        }
        state.s = time_at(config.t0, config.h, step + 1);
        state.p = legendre_p(model, state.s, &state.q, &state.v);
        if !state.is_finite() {
            return Err(Error::NonFinite { step: step + 1 });
        }
        traj.dw.push(dw);
        traj.push(state.s, &state.q, &state.v, &state.p);
    }
    Ok(traj)
}

/// Generates the configured Wiener path and integrates.
pub fn simulate<M: Lagrangian + ?Sized>(model: &M, config: &SimConfig) -> Result<Trajectory> {
    euler_maruyama(model, config, &config.wiener_path()?)
}
