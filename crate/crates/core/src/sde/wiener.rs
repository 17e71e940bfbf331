//! Reproducible Wiener increments.
//!
//! Uniforms come from ChaCha8 keyed by `(seed, stream)`; the k-th standard
//! normal is Box–Muller applied to the 64-bit outputs `2⌊k/2⌋` and
//! `2⌊k/2⌋ + 1` of that stream (cosine branch for even k, sine branch for
//! odd k). Any increment can be regenerated from `(seed, stream, k)` alone,
//! so ensemble members never share or coordinate generator state.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{param, Error, Result};

const TWO_POW_M53: f64 = 1.0 / (1u64 << 53) as f64;

/// Uniform in (0, 1].
fn open_unit(x: u64) -> f64 {
    ((x >> 11) + 1) as f64 * TWO_POW_M53
}

/// Uniform in [0, 1).
fn half_open_unit(x: u64) -> f64 {
    (x >> 11) as f64 * TWO_POW_M53
}

fn box_muller(a: u64, b: u64) -> (f64, f64) {
    let radius = libm::sqrt(-2.0 * libm::log(open_unit(a)));
    let angle = 2.0 * PI * half_open_unit(b);
    (radius * libm::cos(angle), radius * libm::sin(angle))
}

fn generator(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// The first `n` standard normals of stream `(seed, stream)`.
pub fn standard_normals(seed: u64, stream: u64, n: usize) -> Vec<f64> {
    let mut rng = generator(seed, stream);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let (z0, z1) = box_muller(rng.next_u64(), rng.next_u64());
        out.push(z0);
        if out.len() < n {
            out.push(z1);
        }
    }
    out
}

/// The `k`-th standard normal of stream `(seed, stream)`, by random access.
pub fn standard_normal_at(seed: u64, stream: u64, k: u64) -> f64 {
    let mut rng = generator(seed, stream);
    // Each pair consumes two u64 outputs, i.e. four 32-bit words.
    rng.set_word_pos(4 * u128::from(k / 2));
    let (z0, z1) = box_muller(rng.next_u64(), rng.next_u64());
    if k.is_multiple_of(2) {
        z0
    } else {
        z1
    }
}

/// Increments ΔW_n = w((n+1)h) − w(nh) of a scalar Wiener process.
#[derive(Debug, Clone, PartialEq)]
pub struct WienerPath {
    pub seed: u64,
    pub stream: u64,
    pub h: f64,
    pub increments: Vec<f64>,
}

impl WienerPath {
    /// `n` increments of variance `h` from stream `(seed, stream)`.
    pub fn generate(seed: u64, stream: u64, h: f64, n: usize) -> Result<Self> {
        check_grid(h, n)?;
        let scale = libm::sqrt(h);
        let increments = standard_normals(seed, stream, n)
            .into_iter()
            .map(|z| scale * z)
            .collect();
        Ok(WienerPath {
            seed,
            stream,
            h,
            increments,
        })
    }

    /// A path with every increment zero (noise switched off).
    pub fn zero(h: f64, n: usize) -> Result<Self> {
        check_grid(h, n)?;
        Ok(WienerPath {
            seed: 0,
            stream: 0,
            h,
            increments: alloc::vec![0.0; n],
        })
    }

    pub fn steps(&self) -> usize {
        self.increments.len()
    }

    /// The same Brownian path sampled on a grid `factor` times coarser.
    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        if factor == 0 || !self.steps().is_multiple_of(factor) {
            return Err(Error::GridMismatch(format!(
                "cannot coarsen {} steps by a factor of {factor}",
                self.steps()
            )));
        }
        let increments = self
            .increments
            .chunks(factor)
            .map(|c| c.iter().sum())
            .collect();
        Ok(WienerPath {
            seed: self.seed,
            stream: self.stream,
            h: self.h * factor as f64,
            increments,
        })
    }
}

/// `WienerPath::generate` on stream 0.
pub fn wiener_path(seed: u64, h: f64, n: usize) -> Result<WienerPath> {
    WienerPath::generate(seed, 0, h, n)
}

fn check_grid(h: f64, n: usize) -> Result<()> {
    if !(h > 0.0) || !h.is_finite() {
        return param("h", "step must be positive and finite");
    }
    if n == 0 {
        return param("steps", "at least one step is required");
    }
    Ok(())
}
