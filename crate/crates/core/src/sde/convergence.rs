use alloc::format;

use super::integrate::Trajectory;
use crate::error::{Error, Result};

/// Maximum over the coarse grid of the Euclidean distance between the (q, p)
/// states of two runs driven by the same Brownian path.
///
/// The fine grid must refine the coarse one by an integer factor and every
/// coarse increment must equal the sum of the matching fine increments.
pub fn strong_error(fine: &Trajectory, coarse: &Trajectory) -> Result<f64> {
    let mismatch = |msg: alloc::string::String| Err(Error::GridMismatch(msg));
    if fine.dim != coarse.dim {
        return mismatch(format!("dimensions {} and {}", fine.dim, coarse.dim));
    }
    if fine.t0 != coarse.t0 {
        return mismatch(format!("start times {} and {}", fine.t0, coarse.t0));
    }
    let ratio = coarse.h / fine.h;
    let factor = libm::round(ratio);
    if factor < 1.0 || (ratio - factor).abs() > 1e-9 * factor {
        return mismatch(format!("step ratio {ratio} is not an integer"));
    }
    let factor = factor as usize;
    if fine.steps() != coarse.steps() * factor {
        return mismatch(format!(
            "{} fine steps do not refine {} coarse steps by {factor}",
            fine.steps(),
            coarse.steps()
        ));
    }
    for (n, dw) in coarse.dw.iter().enumerate() {
        let summed: f64 = fine.dw[n * factor..(n + 1) * factor].iter().sum();
        if (summed - dw).abs() > 1e-12 * (1.0 + dw.abs()) {
            return mismatch(format!("coarse increment {n} is not the sum of the fine increments"));
        }
    }

    let mut worst: f64 = 0.0;
    for n in 0..=coarse.steps() {
        let m = n * factor;
        let sq: f64 = coarse
            .q_at(n)
            .iter()
            .zip(fine.q_at(m))
            .chain(coarse.p_at(n).iter().zip(fine.p_at(m)))
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        worst = worst.max(libm::sqrt(sq));
    }
    Ok(worst)
}

/// Least-squares slope of `ln(error)` against `ln(h)`.
pub fn fit_order(steps: &[f64], errors: &[f64]) -> f64 {
    let n = steps.len().min(errors.len()) as f64;
    let xs = steps.iter().map(|h| libm::log(*h));
    let ys = errors.iter().map(|e| libm::log(*e));
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for (x, y) in xs.zip(ys) {
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}
