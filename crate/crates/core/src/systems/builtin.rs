use super::Lagrangian;
use crate::error::{param, Result};

/// A scalar potential on ℝⁿ with its gradient.
pub trait Potential {
    fn value(&self, q: &[f64]) -> f64;
    fn gradient(&self, q: &[f64], out: &mut [f64]);
}

/// Elementary one-variable functions used by the built-in systems.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Elementary {
    Zero,
    Sin,
    Cos,
    /// x²/2
    HalfSquare,
}

impl Elementary {
    pub fn value(self, x: f64) -> f64 {
        match self {
            Elementary::Zero => 0.0,
            Elementary::Sin => libm::sin(x),
            Elementary::Cos => libm::cos(x),
            Elementary::HalfSquare => 0.5 * x * x,
        }
    }

    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Elementary::Zero => 0.0,
            Elementary::Sin => libm::cos(x),
            Elementary::Cos => -libm::sin(x),
            Elementary::HalfSquare => x,
        }
    }
}

/// `scale·Σᵢ f(qᵢ)`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Separable {
    pub f: Elementary,
    pub scale: f64,
}

impl Separable {
    pub fn new(f: Elementary) -> Self {
        Separable { f, scale: 1.0 }
    }

    pub fn scaled(f: Elementary, scale: f64) -> Self {
        Separable { f, scale }
    }

    pub fn zero() -> Self {
        Separable::new(Elementary::Zero)
    }
}

impl Potential for Separable {
    fn value(&self, q: &[f64]) -> f64 {
        self.scale * q.iter().map(|&x| self.f.value(x)).sum::<f64>()
    }

    fn gradient(&self, q: &[f64], out: &mut [f64]) {
        for (o, &x) in out.iter_mut().zip(q) {
            *o = self.scale * self.f.derivative(x);
        }
    }
}

/// Potential from a pair of closures.
#[derive(Clone)]
pub struct FnPotential<F, G> {
    pub value: F,
    pub gradient: G,
}

impl<F, G> Potential for FnPotential<F, G>
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64], &mut [f64]),
{
    fn value(&self, q: &[f64]) -> f64 {
        (self.value)(q)
    }

    fn gradient(&self, q: &[f64], out: &mut [f64]) {
        (self.gradient)(q, out)
    }
}

/// Samuelson's economic model, `L = −½e^{−ρs}(v² + 2avq + q²)` on ℝ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Samuelson<G = Separable> {
    pub rho: f64,
    pub a: f64,
    pub noise: G,
}

impl Samuelson {
    /// Samuelson model with the default noise potential γ(q) = q²/2.
    pub fn new(rho: f64, a: f64) -> Result<Self> {
        Samuelson::with_noise(rho, a, Separable::new(Elementary::HalfSquare))
    }
}

impl<G: Potential> Samuelson<G> {
    pub fn with_noise(rho: f64, a: f64, noise: G) -> Result<Self> {
        if !(0.0..1.0).contains(&rho) {
            return param("rho", "Samuelson discount rate must lie in [0, 1)");
        }
        if !(a > -1.0 && a < 1.0) {
            return param("a", "Samuelson coupling must lie in (-1, 1)");
        }
        Ok(Samuelson { rho, a, noise })
    }
}

impl<G: Potential> Lagrangian for Samuelson<G> {
    fn dim(&self) -> usize {
        1
    }

    fn name(&self) -> &str {
        "samuelson"
    }

    fn lagrangian(&self, s: f64, q: &[f64], v: &[f64]) -> f64 {
        let (q, v) = (q[0], v[0]);
        -0.5 * libm::exp(-self.rho * s) * (v * v + 2.0 * self.a * v * q + q * q)
    }

    fn dl_dq(&self, s: f64, q: &[f64], v: &[f64], out: &mut [f64]) {
        out[0] = -libm::exp(-self.rho * s) * (self.a * v[0] + q[0]);
    }

    fn dl_dv(&self, s: f64, q: &[f64], v: &[f64], out: &mut [f64]) {
        out[0] = -libm::exp(-self.rho * s) * (v[0] + self.a * q[0]);
    }

    fn noise_potential(&self, q: &[f64]) -> f64 {
        self.noise.value(q)
    }

    fn dnoise_dq(&self, q: &[f64], out: &mut [f64]) {
        self.noise.gradient(q, out)
    }

    fn hess_vv(&self, s: f64, _q: &[f64], _v: &[f64], out: &mut [f64]) -> bool {
        out[0] = -libm::exp(-self.rho * s);
        true
    }

    fn velocity_of_momentum(&self, s: f64, q: &[f64], p: &[f64], out: &mut [f64]) -> Option<Result<()>> {
        out[0] = -libm::exp(self.rho * s) * p[0] - self.a * q[0];
        Some(Ok(()))
    }

    fn hamiltonian_gradient(&self, s: f64, q: &[f64], p: &[f64], dh_dq: &mut [f64], dh_dp: &mut [f64]) -> bool {
        let a = self.a;
        dh_dp[0] = -(a * q[0] + libm::exp(self.rho * s) * p[0]);
        dh_dq[0] = -((a * a - 1.0) * libm::exp(-self.rho * s) * q[0] + a * p[0]);
        true
    }
}

/// Natural Lagrangian `L = ½‖v‖² − V(q)` on ℝⁿ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Natural<V = Separable, G = Separable> {
    pub dim: usize,
    pub potential: V,
    pub noise: G,
}

impl Natural {
    /// The pendulum-type system `V = cos`, `γ = sin` on ℝ.
    pub fn pendulum() -> Self {
        Natural {
            dim: 1,
            potential: Separable::new(Elementary::Cos),
            noise: Separable::new(Elementary::Sin),
        }
    }
}

impl<V: Potential, G: Potential> Natural<V, G> {
    pub fn new(dim: usize, potential: V, noise: G) -> Result<Self> {
        if dim == 0 {
            return param("dim", "dimension must be positive");
        }
        Ok(Natural {
            dim,
            potential,
            noise,
        })
    }
}

impl<V: Potential, G: Potential> Lagrangian for Natural<V, G> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn name(&self) -> &str {
        "natural"
    }

    fn lagrangian(&self, _s: f64, q: &[f64], v: &[f64]) -> f64 {
        0.5 * v.iter().map(|x| x * x).sum::<f64>() - self.potential.value(q)
    }

    fn dl_dq(&self, _s: f64, q: &[f64], _v: &[f64], out: &mut [f64]) {
        self.potential.gradient(q, out);
        for x in out.iter_mut() {
            *x = -*x;
        }
    }

    fn dl_dv(&self, _s: f64, _q: &[f64], v: &[f64], out: &mut [f64]) {
        out.copy_from_slice(v);
    }

    fn noise_potential(&self, q: &[f64]) -> f64 {
        self.noise.value(q)
    }

    fn dnoise_dq(&self, q: &[f64], out: &mut [f64]) {
        self.noise.gradient(q, out)
    }

    fn hess_vv(&self, _s: f64, _q: &[f64], _v: &[f64], out: &mut [f64]) -> bool {
        let n = self.dim;
        out.fill(0.0);
        for i in 0..n {
            out[i * n + i] = 1.0;
        }
        true
    }

    fn velocity_of_momentum(&self, _s: f64, _q: &[f64], p: &[f64], out: &mut [f64]) -> Option<Result<()>> {
        out.copy_from_slice(p);
        Some(Ok(()))
    }

    fn hamiltonian_gradient(&self, _s: f64, q: &[f64], p: &[f64], dh_dq: &mut [f64], dh_dp: &mut [f64]) -> bool {
        self.potential.gradient(q, dh_dq);
        dh_dp.copy_from_slice(p);
        true
    }
}

/// `e^{−ρs}·L₀(q, v)` for a time-independent base Lagrangian L₀.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Discounted<L> {
    pub base: L,
    pub rho: f64,
}

impl<L: Lagrangian> Discounted<L> {
    pub fn new(base: L, rho: f64) -> Result<Self> {
        if !rho.is_finite() {
            return param("rho", "discount rate must be finite");
        }
        Ok(Discounted { base, rho })
    }

    fn factor(&self, s: f64) -> f64 {
        libm::exp(-self.rho * s)
    }
}

impl<L: Lagrangian> Lagrangian for Discounted<L> {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn name(&self) -> &str {
        "discounted"
    }

    fn lagrangian(&self, s: f64, q: &[f64], v: &[f64]) -> f64 {
        self.factor(s) * self.base.lagrangian(s, q, v)
    }

    fn dl_dq(&self, s: f64, q: &[f64], v: &[f64], out: &mut [f64]) {
        self.base.dl_dq(s, q, v, out);
        let f = self.factor(s);
        out.iter_mut().for_each(|x| *x *= f);
    }

    fn dl_dv(&self, s: f64, q: &[f64], v: &[f64], out: &mut [f64]) {
        self.base.dl_dv(s, q, v, out);
        let f = self.factor(s);
        out.iter_mut().for_each(|x| *x *= f);
    }

    fn noise_potential(&self, q: &[f64]) -> f64 {
        self.base.noise_potential(q)
    }

    fn dnoise_dq(&self, q: &[f64], out: &mut [f64]) {
        self.base.dnoise_dq(q, out)
    }

    fn hess_vv(&self, s: f64, q: &[f64], v: &[f64], out: &mut [f64]) -> bool {
        if !self.base.hess_vv(s, q, v, out) {
            return false;
        }
        let f = self.factor(s);
        out.iter_mut().for_each(|x| *x *= f);
        true
    }

    fn velocity_of_momentum(&self, s: f64, q: &[f64], p: &[f64], out: &mut [f64]) -> Option<Result<()>> {
        // p = e^{−ρs}∂L₀/∂v, so v = (∂L₀/∂v)⁻¹(e^{ρs}p).
        let g = libm::exp(self.rho * s);
        let scaled: alloc::vec::Vec<f64> = p.iter().map(|x| g * x).collect();
        self.base.velocity_of_momentum(s, q, &scaled, out)
    }

    fn numeric_partials(&self) -> bool {
        self.base.numeric_partials()
    }
}
