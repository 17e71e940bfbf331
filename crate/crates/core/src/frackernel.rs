//! Generalized fractional Riemann–Liouville kernel.
//!
//! For an observer time `t` and intrinsic time `s ≠ t` the weight is
//!
//! ```text
//! g_t(s) = exp((α(s−t) − 1)·ln|t−s| + ρ(s−t)) / Γ(α(s−t))
//! ```
//!
//! and its logarithmic derivative in `s` is the drift correction
//!
//! ```text
//! h(s,t) = α′(s−t)·ln|t−s| + (α(s−t) − 1)/(s−t) + ρ − ψ(α(s−t))·α′(s−t)
//! ```
//!
//! With α ≡ 1 and ρ = 0 the weight is identically one and the correction vanishes.

use crate::error::{param, Error, Result};
use crate::special::{digamma, gamma};

/// Default radius of the excluded ball around the observer time.
pub const DEFAULT_SING_EPS: f64 = 1e-8;

/// Exponent function α(z), z = s − t.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlphaProfile {
    Constant(f64),
    /// α(z) = a0 + a1·z
    Affine { a0: f64, a1: f64 },
}

impl AlphaProfile {
    /// Returns `(α(z), α′(z))`, failing when α(z) ∉ (0, 1].
    pub fn eval(&self, z: f64) -> Result<(f64, f64)> {
        let (value, derivative) = match *self {
            AlphaProfile::Constant(a) => (a, 0.0),
            AlphaProfile::Affine { a0, a1 } => (a0 + a1 * z, a1),
        };
        if value > 0.0 && value <= 1.0 {
            Ok((value, derivative))
        } else {
            Err(Error::AlphaRange { z, value })
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, AlphaProfile::Constant(_))
    }

    /// Checks α(z) ∈ (0, 1] on the closed interval `[z_lo, z_hi]`.
    ///
    /// Both supported profiles are affine in z, so the endpoints suffice.
    pub fn check_range(&self, z_lo: f64, z_hi: f64) -> Result<()> {
        self.eval(z_lo)?;
        self.eval(z_hi)?;
        Ok(())
    }
}

/// Generalized fractional weight for a fixed observer time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FracWeight {
    pub profile: AlphaProfile,
    /// Discount rate ρ ≥ 0.
    pub rho: f64,
    /// Observer time t.
    pub t_obs: f64,
    /// Lower integration limit t₀.
    pub t0: f64,
    pub sing_eps: f64,
}

impl FracWeight {
    pub fn new(profile: AlphaProfile, rho: f64, t_obs: f64) -> Result<Self> {
        if !(rho >= 0.0) || !rho.is_finite() {
            return param("rho", "discount rate must be finite and non-negative");
        }
        if !t_obs.is_finite() {
            return param("t_obs", "observer time must be finite");
        }
        Ok(FracWeight {
            profile,
            rho,
            t_obs,
            t0: 0.0,
            sing_eps: DEFAULT_SING_EPS,
        })
    }

    /// The weight with α ≡ 1 and ρ = 0: g ≡ 1 and h ≡ 0.
    pub fn classical(t_obs: f64) -> Self {
        FracWeight {
            profile: AlphaProfile::Constant(1.0),
            rho: 0.0,
            t_obs,
            t0: 0.0,
            sing_eps: DEFAULT_SING_EPS,
        }
    }

    pub fn with_t0(mut self, t0: f64) -> Self {
        self.t0 = t0;
        self
    }

    pub fn with_sing_eps(mut self, eps: f64) -> Self {
        self.sing_eps = eps;
        self
    }

    fn guard(&self, s: f64) -> Result<()> {
        if (s - self.t_obs).abs() <= self.sing_eps {
            Err(Error::Singularity {
                s,
                t_obs: self.t_obs,
                eps: self.sing_eps,
            })
        } else {
            Ok(())
        }
    }

    /// True when the closed interval `[a, b]` stays clear of the singular ball.
    pub fn clears_interval(&self, a: f64, b: f64) -> bool {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        self.t_obs < lo - self.sing_eps || self.t_obs > hi + self.sing_eps
    }

    /// g_t(s).
    pub fn g(&self, s: f64) -> Result<f64> {
        self.guard(s)?;
        let z = s - self.t_obs;
        let (alpha, _) = self.profile.eval(z)?;
        let exponent = (alpha - 1.0) * libm::log(z.abs()) + self.rho * z;
        Ok(libm::exp(exponent) / gamma(alpha)?)
    }

    /// h(s, t), the logarithmic derivative of g_t in s.
    pub fn h(&self, s: f64) -> Result<f64> {
        self.guard(s)?;
        let z = s - self.t_obs;
        let (alpha, dalpha) = self.profile.eval(z)?;
        let mut value = (alpha - 1.0) / z + self.rho;
        if !self.profile.is_constant() {
            // d/ds ln Γ(α(s−t)) = ψ(α)·α′ by the chain rule.
            value += dalpha * libm::log(z.abs()) - digamma(alpha)? * dalpha;
        }
        Ok(value)
    }
}

/// Free-function form of [`FracWeight::g`].
pub fn g_weight(w: &FracWeight, s: f64) -> Result<f64> {
    w.g(s)
}

/// Free-function form of [`FracWeight::h`].
pub fn h_weight(w: &FracWeight, s: f64) -> Result<f64> {
    w.h(s)
}

/// Quadrature result with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error_estimate: f64,
    /// Number of product-midpoint cells in the accepted mesh.
    pub cells: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureOptions {
    /// Ratio between successive graded break points.
    pub grading: f64,
    /// Minimum number of graded cells.
    pub min_cells: usize,
    /// The grading stops once the innermost break point falls below
    /// `innermost_fraction·(t − t₀)`.
    pub innermost_fraction: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Each refinement level doubles the number of uniform sub-cells per graded cell.
    pub max_level: u32,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        QuadratureOptions {
            grading: 0.7,
            min_cells: 64,
            innermost_fraction: 1e-14,
            rel_tol: 1e-9,
            abs_tol: 1e-14,
            max_level: 16,
        }
    }
}

/// Generalized left fractional Riemann–Liouville integral
/// `∫_{t₀}^{t} f(s)·g_t(s) ds` with the kernel observed at time `t`.
pub fn frl_integral<F: Fn(f64) -> f64>(f: F, w: &FracWeight, t: f64) -> Result<Quadrature> {
    frl_integral_with(f, w, t, &QuadratureOptions::default())
}

/// [`frl_integral`] with explicit mesh and tolerance settings.
///
/// In the distance variable u = t − s the interval is cut at the graded break
/// points `(t − t₀)·r^k`. On every cell α is frozen at the cell midpoint, the
/// power factor `u^(α−1)` is integrated exactly and the smooth remainder
/// `f(s)·e^{ρ(s−t)}/Γ(α)` is taken at the midpoint. Successive levels split
/// every graded cell into twice as many uniform sub-cells until two levels agree.
pub fn frl_integral_with<F: Fn(f64) -> f64>(
    f: F,
    w: &FracWeight,
    t: f64,
    opts: &QuadratureOptions,
) -> Result<Quadrature> {
    if !(t > w.t0) {
        return param("t", "upper limit must exceed the lower limit t0");
    }
    if !(opts.grading > 0.0 && opts.grading < 1.0) {
        return param("grading", "must lie in (0, 1)");
    }
    let span = t - w.t0;
    w.profile.check_range(-span, 0.0)?;

    let mut breaks = alloc::vec![span];
    let floor = span * opts.innermost_fraction;
    let mut u = span;
    while breaks.len() <= opts.min_cells || u > floor {
        u *= opts.grading;
        breaks.push(u);
    }

    let mut previous = quadrature_level(&f, w, t, &breaks, 1)?;
    let mut estimate = f64::INFINITY;
    let mut subcells = 1usize;
    for _ in 0..opts.max_level {
        subcells *= 2;
        let current = quadrature_level(&f, w, t, &breaks, subcells)?;
        // Product midpoint converges at second order in the sub-cell width.
        estimate = (current - previous).abs() / 3.0;
        previous = current;
        if !estimate.is_finite() {
            break;
        }
        if estimate <= opts.abs_tol.max(opts.rel_tol * current.abs()) {
            return Ok(Quadrature {
                value: current,
                error_estimate: estimate,
                cells: (breaks.len() - 1) * subcells + 1,
            });
        }
    }
    Err(Error::Quadrature {
        value: previous,
        estimate,
    })
}

fn quadrature_level<F: Fn(f64) -> f64>(
    f: &F,
    w: &FracWeight,
    t: f64,
    breaks: &[f64],
    subcells: usize,
) -> Result<f64> {
    let mut sum = 0.0;
    for pair in breaks.windows(2) {
        let (hi, lo) = (pair[0], pair[1]);
        let width = (hi - lo) / subcells as f64;
        for j in 0..subcells {
            let a = lo + j as f64 * width;
            let b = if j + 1 == subcells { hi } else { a + width };
            sum += product_cell(f, w, t, a, b)?;
        }
    }
    let innermost = *breaks.last().expect("mesh has at least two break points");
    sum += product_cell(f, w, t, 0.0, innermost)?;
    Ok(sum)
}

/// ∫_{u_lo}^{u_hi} f(t − u)·u^(α_c − 1)·e^{−ρu}/Γ(α_c) du with α frozen at the midpoint.
fn product_cell<F: Fn(f64) -> f64>(f: &F, w: &FracWeight, t: f64, u_lo: f64, u_hi: f64) -> Result<f64> {
    let u_mid = 0.5 * (u_lo + u_hi);
    let (alpha, _) = w.profile.eval(-u_mid)?;
    let kernel_mass = if u_lo > 0.0 {
        // (u_hi^α − u_lo^α)/α without cancellation for thin cells.
        libm::pow(u_lo, alpha) * libm::expm1(alpha * libm::log(u_hi / u_lo)) / alpha
    } else {
        libm::pow(u_hi, alpha) / alpha
    };
    let smooth = f(t - u_mid) * libm::exp(-w.rho * u_mid) / gamma(alpha)?;
    Ok(kernel_mass * smooth)
}
