use alloc::string::String;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("{func}: argument {x} outside the domain")]
    Domain { func: &'static str, x: f64 },

    #[error("{func}: argument {x} overflows f64")]
    Overflow { func: &'static str, x: f64 },

    #[error("alpha profile evaluates to {value} at z = {z}, outside (0, 1]")]
    AlphaRange { z: f64, value: f64 },

    #[error("intrinsic time s = {s} lies within {eps} of the observer time {t_obs}")]
    Singularity { s: f64, t_obs: f64, eps: f64 },

    #[error("fractional quadrature did not converge: value {value}, error estimate {estimate}")]
    Quadrature { value: f64, estimate: f64 },

    #[error("Legendre map could not be inverted at s = {s} after {iterations} Newton iterations")]
    Hyperregularity { s: f64, iterations: usize },

    #[error("model provides neither an inverse Legendre map nor a velocity Hessian")]
    NoLegendreInverse,

    #[error("metric is singular at the queried configuration")]
    SingularMetric,

    #[error("non-finite state at step {step}")]
    NonFinite { step: usize },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    #[error("variation must vanish at both endpoints (dq[0] = dq[N] = 0)")]
    Endpoint,
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn param<T>(name: &'static str, reason: impl Into<String>) -> Result<T> {
    Err(Error::Parameter {
        name,
        reason: reason.into(),
    })
}
