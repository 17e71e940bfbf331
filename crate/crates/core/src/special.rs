//! Euler Gamma and digamma functions for positive real arguments.
//!
//! Gamma uses the Lanczos approximation with g = 7 and nine coefficients
//! (reflection below 1/2). Digamma shifts the argument above 6 with the
//! recurrence ψ(x) = ψ(x + 1) − 1/x and finishes with the asymptotic series.

use core::f64::consts::PI;

use crate::error::{Error, Result};

const LANCZOS_G: f64 = 7.0;

const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Largest argument accepted by [`gamma`].
pub const GAMMA_MAX_ARG: f64 = 170.0;

const DIGAMMA_SHIFT: f64 = 6.0;

/// Euler Gamma function Γ(x) for x ∈ (0, 170].
pub fn gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain { func: "gamma", x });
    }
    if x > GAMMA_MAX_ARG {
        return Err(Error::Overflow { func: "gamma", x });
    }
    Ok(gamma_positive(x))
}

fn gamma_positive(x: f64) -> f64 {
    // (n − 1)! is exactly representable up to n = 23.
    if x <= 23.0 && x == libm::floor(x) {
        return (1..x as u32).fold(1.0, |acc, k| acc * k as f64);
    }
    if x < 0.5 {
        // Γ(x)Γ(1 − x) = π / sin(πx), and 1 − x ∈ (1/2, 1) stays on the Lanczos branch.
        return PI / (libm::sin(PI * x) * lanczos(1.0 - x));
    }
    lanczos(x)
}

fn lanczos(x: f64) -> f64 {
    let x = x - 1.0;
    let mut series = LANCZOS_COEFFS[0];
    for (i, c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        series += c / (x + i as f64);
    }
    let w = x + LANCZOS_G + 0.5;
    // w^(x+1/2) as a square of w^(x/2+1/4); the unsplit power overflows near x = 170.
    let half = libm::pow(w, 0.5 * (x + 0.5));
    libm::sqrt(2.0 * PI) * half * (half * libm::exp(-w)) * series
}

/// Digamma ψ(x) = Γ′(x)/Γ(x) for x > 0.
pub fn digamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain { func: "digamma", x });
    }
    let mut x = x;
    let mut acc = 0.0;
    while x < DIGAMMA_SHIFT {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    // Bernoulli tail: Σ B_2k / (2k x^2k), k = 1..7, Horner in x^-2.
    let tail = inv2
        * (1.0 / 12.0
            - inv2
                * (1.0 / 120.0
                    - inv2
                        * (1.0 / 252.0
                            - inv2
                                * (1.0 / 240.0
                                    - inv2
                                        * (1.0 / 132.0
                                            - inv2 * (691.0 / 32_760.0 - inv2 / 12.0))))));
    Ok(acc + libm::log(x) - 0.5 * inv - tail)
}
