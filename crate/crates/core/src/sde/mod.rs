//! Wiener paths and Euler–Maruyama integration of the stochastic HP,
//! Hamiltonian and metric-velocity equations.
//!
//! The Itô interpretation is used throughout: noise coefficients are
//! evaluated at the left end of each step.

mod convergence;
mod drift;
mod integrate;
mod wiener;

pub use convergence::{fit_order, strong_error};
pub use drift::{
    ham_drift, hp_drift_classical, hp_drift_fractional, metric_velocity_drift, Drift, FrictionSign,
    VelocityDrift,
};
pub use integrate::{
    drift_for, euler_maruyama, euler_maruyama_metric, integrate_with, simulate, time_at, Formulation, Initial,
    RunMeta, SimConfig, Trajectory,
};
pub use wiener::{standard_normal_at, standard_normals, wiener_path, WienerPath};

#[cfg(test)]
mod tests;
