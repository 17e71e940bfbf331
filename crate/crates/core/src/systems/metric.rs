use alloc::vec;
use alloc::vec::Vec;

use super::builtin::{Potential, Separable};
use super::Lagrangian;
use crate::error::{Error, Result};
use crate::linalg;

/// A Riemannian metric on an ℝⁿ chart.
pub trait Metric {
    fn dim(&self) -> usize;

    fn name(&self) -> &str {
        "metric"
    }

    /// g_kl(q), row-major `n×n`.
    fn metric(&self, q: &[f64], out: &mut [f64]);

    /// ∂g_kl/∂q^i stored at `out[i·n² + k·n + l]`.
    fn metric_derivative(&self, q: &[f64], out: &mut [f64]);
}

impl<T: Metric + ?Sized> Metric for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn name(&self) -> &str {
        (**self).name()
    }
    fn metric(&self, q: &[f64], out: &mut [f64]) {
        (**self).metric(q, out)
    }
    fn metric_derivative(&self, q: &[f64], out: &mut [f64]) {
        (**self).metric_derivative(q, out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Euclidean {
    pub dim: usize,
}

impl Metric for Euclidean {
    fn dim(&self) -> usize {
        self.dim
    }
    fn name(&self) -> &str {
        "euclidean"
    }
    fn metric(&self, _q: &[f64], out: &mut [f64]) {
        identity_scaled(self.dim, 1.0, out);
    }
    fn metric_derivative(&self, _q: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }
}

/// `c·δ_kl` with a constant c > 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantDiagonal {
    pub dim: usize,
    pub c: f64,
}

impl Metric for ConstantDiagonal {
    fn dim(&self) -> usize {
        self.dim
    }
    fn name(&self) -> &str {
        "constant"
    }
    fn metric(&self, _q: &[f64], out: &mut [f64]) {
        identity_scaled(self.dim, self.c, out);
    }
    fn metric_derivative(&self, _q: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }
}

/// The polar-type metric `dr² + r²dθ²` with q = (r, θ).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Polar;

impl Metric for Polar {
    fn dim(&self) -> usize {
        2
    }
    fn name(&self) -> &str {
        "polar"
    }
    fn metric(&self, q: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&[1.0, 0.0, 0.0, q[0] * q[0]]);
    }
    fn metric_derivative(&self, q: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        // ∂g_22/∂r = 2r
        out[3] = 2.0 * q[0];
    }
}

fn identity_scaled(n: usize, c: f64, out: &mut [f64]) {
    out.fill(0.0);
    for i in 0..n {
        out[i * n + i] = c;
    }
}

/// Christoffel symbols Γ^i_jk stored at `[i·n² + j·n + k]`.
///
/// Γ^i_jk = ½ g^{il}(∂_j g_lk + ∂_k g_jl − ∂_l g_jk). Only `j ≤ k` is
/// evaluated; the other half is mirrored, so the lower-index symmetry is exact.
pub fn christoffel<G: Metric + ?Sized>(metric: &G, q: &[f64]) -> Result<Vec<f64>> {
    let n = metric.dim();
    let mut g = vec![0.0; n * n];
    let mut dg = vec![0.0; n * n * n];
    metric.metric(q, &mut g);
    metric.metric_derivative(q, &mut dg);
    let ginv = linalg::inverse(n, &g).ok_or(Error::SingularMetric)?;
    let d = |i: usize, k: usize, l: usize| dg[i * n * n + k * n + l];

    let mut gamma = vec![0.0; n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in j..n {
                let mut acc = 0.0;
                for l in 0..n {
                    let lowered = d(j, l, k) + d(k, j, l) - d(l, j, k);
                    acc += ginv[i * n + l] * lowered;
                }
                let value = 0.5 * acc;
                gamma[i * n * n + j * n + k] = value;
                gamma[i * n * n + k * n + j] = value;
            }
        }
    }
    Ok(gamma)
}

/// Checks symmetry (≤ 1e−12), positive definiteness, and agreement of the
/// supplied derivative with centered differences of g (≤ 1e−5) at `q`.
pub fn validate_metric_at<G: Metric + ?Sized>(metric: &G, q: &[f64]) -> Result<()> {
    let n = metric.dim();
    let mut g = vec![0.0; n * n];
    metric.metric(q, &mut g);
    for k in 0..n {
        for l in 0..k {
            if (g[k * n + l] - g[l * n + k]).abs() > 1e-12 {
                return crate::error::param("metric", "g(q) is not symmetric");
            }
        }
    }
    if !linalg::is_positive_definite(n, &g) {
        return Err(Error::SingularMetric);
    }
    let mut dg = vec![0.0; n * n * n];
    metric.metric_derivative(q, &mut dg);
    let mut qp = q.to_vec();
    let mut gp = vec![0.0; n * n];
    let mut gm = vec![0.0; n * n];
    for i in 0..n {
        let step = 1e-6 * q[i].abs().max(1.0);
        qp[i] = q[i] + step;
        metric.metric(&qp, &mut gp);
        qp[i] = q[i] - step;
        metric.metric(&qp, &mut gm);
        qp[i] = q[i];
        for kl in 0..n * n {
            let fd = (gp[kl] - gm[kl]) / (2.0 * step);
            if (fd - dg[i * n * n + kl]).abs() > 1e-5 {
                return crate::error::param("metric_derivative", "does not match finite differences of g");
            }
        }
    }
    Ok(())
}

/// `L = ½ g_kl(q) v^k v^l` with a noise potential.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricModel<G, N = Separable> {
    pub metric: G,
    pub noise: N,
}

impl<G: Metric> MetricModel<G> {
    pub fn new(metric: G) -> Self {
        MetricModel {
            metric,
            noise: Separable::zero(),
        }
    }
}

impl<G: Metric, N: Potential> MetricModel<G, N> {
    pub fn with_noise(metric: G, noise: N) -> Self {
        MetricModel { metric, noise }
    }

    pub(crate) fn metric_matrix(&self, q: &[f64]) -> Vec<f64> {
        let n = self.metric.dim();
        let mut g = vec![0.0; n * n];
        self.metric.metric(q, &mut g);
        g
    }

    /// g⁻¹(q), row-major.
    pub fn inverse_metric(&self, q: &[f64]) -> Result<Vec<f64>> {
        let n = self.metric.dim();
        linalg::inverse(n, &self.metric_matrix(q)).ok_or(Error::SingularMetric)
    }

    /// ‖v‖_g = sqrt(g_kl v^k v^l)
    pub fn speed(&self, q: &[f64], v: &[f64]) -> f64 {
        libm::sqrt(2.0 * self.lagrangian(0.0, q, v))
    }
}

impl<G: Metric, N: Potential> Lagrangian for MetricModel<G, N> {
    fn dim(&self) -> usize {
        self.metric.dim()
    }

    fn name(&self) -> &str {
        "metric"
    }

    fn lagrangian(&self, _s: f64, q: &[f64], v: &[f64]) -> f64 {
        let n = self.dim();
        let g = self.metric_matrix(q);
        let mut gv = vec![0.0; n];
        linalg::mat_vec(n, &g, v, &mut gv);
        0.5 * linalg::dot(v, &gv)
    }

    fn dl_dq(&self, _s: f64, q: &[f64], v: &[f64], out: &mut [f64]) {
        let n = self.dim();
        let mut dg = vec![0.0; n * n * n];
        self.metric.metric_derivative(q, &mut dg);
        for (i, o) in out.iter_mut().enumerate() {
            let block = &dg[i * n * n..(i + 1) * n * n];
            let mut acc = 0.0;
            for k in 0..n {
                for l in 0..n {
                    acc += block[k * n + l] * v[k] * v[l];
                }
            }
            *o = 0.5 * acc;
        }
    }

    fn dl_dv(&self, _s: f64, q: &[f64], v: &[f64], out: &mut [f64]) {
        let g = self.metric_matrix(q);
        linalg::mat_vec(self.dim(), &g, v, out);
    }

    fn noise_potential(&self, q: &[f64]) -> f64 {
        self.noise.value(q)
    }

    fn dnoise_dq(&self, q: &[f64], out: &mut [f64]) {
        self.noise.gradient(q, out)
    }

    fn hess_vv(&self, _s: f64, q: &[f64], _v: &[f64], out: &mut [f64]) -> bool {
        self.metric.metric(q, out);
        true
    }

    fn velocity_of_momentum(&self, _s: f64, q: &[f64], p: &[f64], out: &mut [f64]) -> Option<Result<()>> {
        let n = self.dim();
        Some(match linalg::solve(n, &self.metric_matrix(q), p) {
            Some(v) if v.iter().all(|x| x.is_finite()) => {
                out.copy_from_slice(&v);
                Ok(())
            }
            _ => Err(Error::SingularMetric),
        })
    }
}
