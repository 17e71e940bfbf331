//! Thin helpers over nalgebra for the small dense systems used by the models.

use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

/// Solves `a·x = b` for a row-major `n×n` matrix. `None` when singular.
pub(crate) fn solve(n: usize, a: &[f64], b: &[f64]) -> Option<Vec<f64>> {
    let m = DMatrix::from_row_slice(n, n, a);
    let rhs = DVector::from_column_slice(b);
    m.lu().solve(&rhs).map(|x| x.as_slice().to_vec())
}

/// Row-major inverse. `None` when singular.
pub(crate) fn inverse(n: usize, a: &[f64]) -> Option<Vec<f64>> {
    let m = DMatrix::from_row_slice(n, n, a);
    let inv = m.try_inverse()?;
    if inv.iter().all(|x| x.is_finite()) {
        Some(inv.transpose().as_slice().to_vec())
    } else {
        None
    }
}

pub(crate) fn determinant(n: usize, a: &[f64]) -> f64 {
    DMatrix::from_row_slice(n, n, a).determinant()
}

/// Extreme singular values `(σ_min, σ_max)`.
pub(crate) fn singular_value_range(n: usize, a: &[f64]) -> (f64, f64) {
    let sv = DMatrix::from_row_slice(n, n, a).singular_values();
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = sv.iter().cloned().fold(0.0, f64::max);
    (min, max)
}

pub(crate) fn is_positive_definite(n: usize, a: &[f64]) -> bool {
    DMatrix::from_row_slice(n, n, a).cholesky().is_some()
}

pub(crate) fn mat_vec(n: usize, a: &[f64], x: &[f64], out: &mut [f64]) {
    for i in 0..n {
        out[i] = (0..n).map(|j| a[i * n + j] * x[j]).sum();
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
