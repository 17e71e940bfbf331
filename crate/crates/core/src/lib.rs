//! Numerical core for stochastic generalized-fractional Hamilton–Pontryagin
//! mechanics: special functions, the fractional kernel, mechanical system
//! models, Euler–Maruyama integration and the discrete stochastic action.
//!
//! The crate is `no_std` and needs only `alloc`.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod action;
pub mod error;
pub mod frackernel;
pub mod sde;
pub mod special;
pub mod systems;

mod linalg;

pub use error::{Error, Result};
