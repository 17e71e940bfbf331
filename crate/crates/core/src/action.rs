//! Discrete stochastic (fractional) Hamilton–Pontryagin action and a
//! numerical check that integrated trajectories are its critical points.
//!
//! On the grid `s_n = t₀ + n·h` the action of a curve (q, v, p) is the Itô sum
//!
//! ```text
//! A = Σ_n [L(s_n, q_n, v_n) + ⟨p_n, (q_{n+1} − q_n)/h − v_n⟩]·g_n·h + Σ_n γ(q_n)·g_n·ΔW_n
//! ```
//!
//! over n = 0..N−1, with `g_n = 1` in the classical case and `g_n = g_t(s_n)`
//! in the fractional case. Variations act on the curve only; the Wiener
//! increments stay frozen.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{param, Error, Result};
use crate::frackernel::FracWeight;
use crate::linalg::dot;
use crate::sde::{euler_maruyama, SimConfig, Trajectory, WienerPath};
use crate::systems::Lagrangian;

/// Step of the centered difference in [`action_differential`].
pub const VARIATION_EPS: f64 = 1e-6;
/// Highest sine mode in the random variation basis.
pub const VARIATION_MODES: usize = 5;

/// Direction `(δq, δv, δp)` on an N-step grid; δq vanishes at both ends.
#[derive(Debug, Clone, PartialEq)]
pub struct PathVariation {
    dim: usize,
    dq: Vec<f64>,
    dv: Vec<f64>,
    dp: Vec<f64>,
}

impl PathVariation {
    /// Row-major `(N+1)×dim` arrays. Rejects δq with non-zero endpoints.
    pub fn new(dim: usize, dq: Vec<f64>, dv: Vec<f64>, dp: Vec<f64>) -> Result<Self> {
        if dim == 0 || !dq.len().is_multiple_of(dim) || dq.len() < 2 * dim {
            return param("dq", "expected (N+1)·dim values with N ≥ 1");
        }
        if dv.len() != dq.len() || dp.len() != dq.len() {
            return param("dv", "dq, dv and dp must have the same shape");
        }
        let last = dq.len() - dim;
        if dq[..dim].iter().chain(&dq[last..]).any(|&x| x != 0.0) {
            return Err(Error::Endpoint);
        }
        Ok(PathVariation { dim, dq, dv, dp })
    }

    pub fn zero(dim: usize, steps: usize) -> Self {
        let len = (steps + 1) * dim;
        PathVariation {
            dim,
            dq: vec![0.0; len],
            dv: vec![0.0; len],
            dp: vec![0.0; len],
        }
    }

    pub fn steps(&self) -> usize {
        self.dq.len() / self.dim - 1
    }

    pub fn dq(&self) -> &[f64] {
        &self.dq
    }

    pub fn dv(&self) -> &[f64] {
        &self.dv
    }

    pub fn dp(&self) -> &[f64] {
        &self.dp
    }

    /// λ·self
    pub fn scaled(&self, lambda: f64) -> Self {
        let scale = |xs: &[f64]| xs.iter().map(|x| lambda * x).collect();
        PathVariation {
            dim: self.dim,
            dq: scale(&self.dq),
            dv: scale(&self.dv),
            dp: scale(&self.dp),
        }
    }

    /// Only the δp component of `self`.
    pub fn momentum_part(&self) -> Self {
        PathVariation {
            dim: self.dim,
            dq: vec![0.0; self.dq.len()],
            dv: vec![0.0; self.dv.len()],
            dp: self.dp.clone(),
        }
    }
}

/// Smooth random variations from fixed coefficients, evaluable on any grid.
///
/// δq^i(τ) = Σ_{m=1}^{5} c_m sin(mπτ) and δv^i, δp^i = Σ_{m=0}^{4} c_m cos(mπτ)
/// with τ = (s − a)/(b − a); each coefficient set is uniform in [−1, 1] and
/// scaled to unit Euclidean norm.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothVariation {
    dim: usize,
    q_coeffs: Vec<f64>,
    v_coeffs: Vec<f64>,
    p_coeffs: Vec<f64>,
}

impl SmoothVariation {
    pub fn random<R: Rng>(dim: usize, rng: &mut R) -> Self {
        let mut draw = || {
            let mut c: Vec<f64> = (0..dim * VARIATION_MODES)
                .map(|_| rng.random_range(-1.0..=1.0))
                .collect();
            let norm = libm::sqrt(dot(&c, &c));
            if norm > 0.0 {
                c.iter_mut().for_each(|x| *x /= norm);
            }
            c
        };
        let q_coeffs = draw();
        let v_coeffs = draw();
        let p_coeffs = draw();
        SmoothVariation {
            dim,
            q_coeffs,
            v_coeffs,
            p_coeffs,
        }
    }

    /// Samples the variation on an N-step grid.
    pub fn on_grid(&self, steps: usize) -> PathVariation {
        let n = self.dim;
        let len = (steps + 1) * n;
        let (mut dq, mut dv, mut dp) = (vec![0.0; len], vec![0.0; len], vec![0.0; len]);
        for k in 0..=steps {
            let tau = k as f64 / steps as f64;
            for i in 0..n {
                let coeff = |c: &[f64], m: usize| c[i * VARIATION_MODES + m];
                let mut q = 0.0;
                let mut v = 0.0;
                let mut p = 0.0;
                for m in 0..VARIATION_MODES {
                    q += coeff(&self.q_coeffs, m) * libm::sin((m + 1) as f64 * PI * tau);
                    let c = libm::cos(m as f64 * PI * tau);
                    v += coeff(&self.v_coeffs, m) * c;
                    p += coeff(&self.p_coeffs, m) * c;
                }
                // sin(mπ) is not exactly zero in floating point.
                if k == 0 || k == steps {
                    q = 0.0;
                }
                dq[k * n + i] = q;
                dv[k * n + i] = v;
                dp[k * n + i] = p;
            }
        }
        PathVariation { dim: n, dq, dv, dp }
    }
}

fn check_grid(path: &Trajectory, wiener: &WienerPath) -> Result<()> {
    if path.steps() != wiener.steps() || (path.h - wiener.h).abs() > 1e-15 * path.h {
        return Err(Error::GridMismatch(format!(
            "path has {} steps of {}, Wiener path {} steps of {}",
            path.steps(),
            path.h,
            wiener.steps(),
            wiener.h
        )));
    }
    Ok(())
}

fn weights(path: &Trajectory, weight: Option<&FracWeight>) -> Result<Vec<f64>> {
    let steps = path.steps();
    match weight {
        None => Ok(vec![1.0; steps]),
        Some(w) => path.times[..steps].iter().map(|&s| w.g(s)).collect(),
    }
}

fn action_sum<M: Lagrangian + ?Sized>(
    model: &M,
    grid: &Trajectory,
    q: &[f64],
    v: &[f64],
    p: &[f64],
    g: &[f64],
    dw: &[f64],
) -> f64 {
    let (dim, h, times) = (grid.dim, grid.h, &grid.times);
    let mut lebesgue = 0.0;
    let mut ito = 0.0;
    for (n, (&gn, &dwn)) in g.iter().zip(dw).enumerate() {
        let (qn, vn, pn) = (&q[n * dim..(n + 1) * dim], &v[n * dim..(n + 1) * dim], &p[n * dim..(n + 1) * dim]);
        let qnext = &q[(n + 1) * dim..(n + 2) * dim];
        let pairing: f64 = (0..dim).map(|i| pn[i] * ((qnext[i] - qn[i]) / h - vn[i])).sum();
        lebesgue += (model.lagrangian(times[n], qn, vn) + pairing) * gn * h;
        ito += model.noise_potential(qn) * gn * dwn;
    }
    lebesgue + ito
}

/// Discrete stochastic action of `path` against the frozen increments of `wiener`.
///
/// `weight = None` is the classical action; otherwise the fractional weight
/// g_t(s_n) multiplies both sums.
pub fn discrete_action<M: Lagrangian + ?Sized>(
    path: &Trajectory,
    model: &M,
    weight: Option<&FracWeight>,
    wiener: &WienerPath,
) -> Result<f64> {
    check_grid(path, wiener)?;
    let g = weights(path, weight)?;
    Ok(action_sum(
        model,
        path,
        &path.q,
        &path.v,
        &path.p,
        &g,
        &wiener.increments,
    ))
}

/// Directional derivative of the action, `(A(c + εδ) − A(c − εδ))/(2ε)` with
/// ε = [`VARIATION_EPS`] and the same Wiener increments on both sides.
pub fn action_differential<M: Lagrangian + ?Sized>(
    path: &Trajectory,
    variation: &PathVariation,
    model: &M,
    weight: Option<&FracWeight>,
    wiener: &WienerPath,
) -> Result<f64> {
    check_grid(path, wiener)?;
    if variation.dim != path.dim || variation.steps() != path.steps() {
        return Err(Error::GridMismatch(format!(
            "variation has {} steps, path has {}",
            variation.steps(),
            path.steps()
        )));
    }
    if variation.dq.iter().chain(&variation.dv).chain(&variation.dp).all(|&x| x == 0.0) {
        return Ok(0.0);
    }
    let g = weights(path, weight)?;
    let shifted = |sign: f64| {
        let add = |base: &[f64], delta: &[f64]| -> Vec<f64> {
            base.iter().zip(delta).map(|(b, d)| b + sign * VARIATION_EPS * d).collect()
        };
        let q = add(&path.q, &variation.dq);
        let v = add(&path.v, &variation.dv);
        let p = add(&path.p, &variation.dp);
        action_sum(model, path, &q, &v, &p, &g, &wiener.increments)
    };
    Ok((shifted(1.0) - shifted(-1.0)) / (2.0 * VARIATION_EPS))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalityOptions {
    pub variations: usize,
    /// Number of grids: h, h/2, ..., h/2^(levels−1).
    pub levels: usize,
    pub variation_seed: u64,
    /// Every refinement ratio must reach this value for a pass.
    pub min_ratio: f64,
}

impl Default for CriticalityOptions {
    fn default() -> Self {
        CriticalityOptions {
            variations: 20,
            levels: 3,
            variation_seed: 0x5EED,
            min_ratio: 1.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriticalityLevel {
    pub h: f64,
    pub steps: usize,
    pub max_abs_differential: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriticalityReport {
    pub levels: Vec<CriticalityLevel>,
    /// `max|dA|(h_k) / max|dA|(h_{k+1})` for successive levels.
    pub ratios: Vec<f64>,
    pub pass: bool,
}

/// Integrates `config` on successively halved grids sharing one Brownian path
/// and measures the largest |dA| over random smooth variations on each grid.
///
/// The integrated trajectory is a critical point of the discrete action only
/// up to O(h), so the check is a trend: |dA| must shrink by at least
/// `min_ratio` per halving.
pub fn criticality_report<M: Lagrangian + ?Sized>(
    model: &M,
    config: &SimConfig,
    opts: &CriticalityOptions,
) -> Result<CriticalityReport> {
    criticality_report_with(model, config, opts, |cfg, path| euler_maruyama(model, cfg, path))
}

/// [`criticality_report`] with a caller-supplied integrator.
pub fn criticality_report_with<M, F>(
    model: &M,
    config: &SimConfig,
    opts: &CriticalityOptions,
    mut integrate: F,
) -> Result<CriticalityReport>
where
    M: Lagrangian + ?Sized,
    F: FnMut(&SimConfig, &WienerPath) -> Result<Trajectory>,
{
    if opts.levels < 2 {
        return param("levels", "at least two grids are needed for a trend");
    }
    if opts.variations == 0 {
        return param("variations", "at least one variation is required");
    }
    config.validate(model.dim())?;
    let finest_factor = 1usize << (opts.levels - 1);
    let finest = config.refined(finest_factor);
    let fine_path = finest.wiener_path()?;
    let weight = if config.formulation.is_fractional() {
        config.weight.as_ref()
    } else {
        None
    };

    let mut rng = ChaCha8Rng::seed_from_u64(opts.variation_seed);
    let basis: Vec<SmoothVariation> = (0..opts.variations)
        .map(|_| SmoothVariation::random(model.dim(), &mut rng))
        .collect();

    let mut levels = Vec::with_capacity(opts.levels);
    for level in 0..opts.levels {
        let factor = 1usize << level;
        let cfg = config.refined(factor);
        let path = fine_path.coarsen(finest_factor / factor)?;
        let traj = integrate(&cfg, &path)?;
        let mut worst: f64 = 0.0;
        for var in &basis {
            let da = action_differential(&traj, &var.on_grid(cfg.steps), model, weight, &path)?;
            worst = worst.max(da.abs());
        }
        levels.push(CriticalityLevel {
            h: cfg.h,
            steps: cfg.steps,
            max_abs_differential: worst,
        });
    }
    let ratios: Vec<f64> = levels
        .windows(2)
        .map(|w| w[0].max_abs_differential / w[1].max_abs_differential)
        .collect();
    let pass = ratios.iter().all(|&r| r >= opts.min_ratio);
    Ok(CriticalityReport {
        levels,
        ratios,
        pass,
    })
}
