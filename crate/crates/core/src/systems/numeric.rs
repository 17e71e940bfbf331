use alloc::vec::Vec;

use super::Lagrangian;

/// Relative step for first partials: δ = FD_REL_STEP·max(1, |x|).
pub const FD_REL_STEP: f64 = 1e-6;
/// Relative step for the second differences of the velocity Hessian.
pub const HESSIAN_REL_STEP: f64 = 1e-4;

fn step(x: f64, rel: f64) -> f64 {
    rel * x.abs().max(1.0)
}

/// A model given only by `L(s, q, v)` and `γ(q)`; every partial derivative is a
/// centered finite difference.
#[derive(Clone)]
pub struct NumericModel<F, G> {
    dim: usize,
    lagrangian: F,
    noise: G,
}

impl<F, G> NumericModel<F, G>
where
    F: Fn(f64, &[f64], &[f64]) -> f64,
    G: Fn(&[f64]) -> f64,
{
    pub fn new(dim: usize, lagrangian: F, noise: G) -> Self {
        NumericModel {
            dim,
            lagrangian,
            noise,
        }
    }
}

/// Centered difference of `f` along each coordinate of `x`.
fn gradient(x: &[f64], out: &mut [f64], f: impl Fn(&[f64]) -> f64) {
    let mut xp: Vec<f64> = x.to_vec();
    for i in 0..x.len() {
        let h = step(x[i], FD_REL_STEP);
        xp[i] = x[i] + h;
        let fp = f(&xp);
        xp[i] = x[i] - h;
        let fm = f(&xp);
        xp[i] = x[i];
        out[i] = (fp - fm) / (2.0 * h);
    }
}

impl<F, G> Lagrangian for NumericModel<F, G>
where
    F: Fn(f64, &[f64], &[f64]) -> f64,
    G: Fn(&[f64]) -> f64,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn name(&self) -> &str {
        "numeric"
    }

    fn lagrangian(&self, s: f64, q: &[f64], v: &[f64]) -> f64 {
        (self.lagrangian)(s, q, v)
    }

    fn dl_dq(&self, s: f64, q: &[f64], v: &[f64], out: &mut [f64]) {
        gradient(q, out, |qq| (self.lagrangian)(s, qq, v));
    }

    fn dl_dv(&self, s: f64, q: &[f64], v: &[f64], out: &mut [f64]) {
        gradient(v, out, |vv| (self.lagrangian)(s, q, vv));
    }

    fn noise_potential(&self, q: &[f64]) -> f64 {
        (self.noise)(q)
    }

    fn dnoise_dq(&self, q: &[f64], out: &mut [f64]) {
        gradient(q, out, |qq| (self.noise)(qq));
    }

    fn hess_vv(&self, s: f64, q: &[f64], v: &[f64], out: &mut [f64]) -> bool {
        let n = self.dim;
        let l = |vv: &[f64]| (self.lagrangian)(s, q, vv);
        let mut w: Vec<f64> = v.to_vec();
        for i in 0..n {
            let hi = step(v[i], HESSIAN_REL_STEP);
            for j in i..n {
                let hj = step(v[j], HESSIAN_REL_STEP);
                let value = if i == j {
                    let f0 = l(&w);
                    w[i] = v[i] + hi;
                    let fp = l(&w);
                    w[i] = v[i] - hi;
                    let fm = l(&w);
                    w[i] = v[i];
                    (fp - 2.0 * f0 + fm) / (hi * hi)
                } else {
                    let mut corner = |si: f64, sj: f64| {
                        w[i] = v[i] + si * hi;
                        w[j] = v[j] + sj * hj;
                        let f = l(&w);
                        w[i] = v[i];
                        w[j] = v[j];
                        f
                    };
                    (corner(1.0, 1.0) - corner(1.0, -1.0) - corner(-1.0, 1.0) + corner(-1.0, -1.0))
                        / (4.0 * hi * hj)
                };
                out[i * n + j] = value;
                out[j * n + i] = value;
            }
        }
        true
    }

    fn numeric_partials(&self) -> bool {
        true
    }
}
