use std::io;
use std::path::PathBuf;

use frachp_core::Error as CoreError;

/// Failure of a CLI command, carrying its process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numeric abort: {0}")]
    Numeric(CoreError),
    #[error("quadrature failure: {0}")]
    Quadrature(CoreError),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("plot: {0}")]
    Plot(String),
    /// A study ran to completion but its verdict is negative.
    #[error("check failed: {0}")]
    Check(String),
}

pub const EXIT_CHECK_FAILED: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_NUMERIC: u8 = 3;
pub const EXIT_QUADRATURE: u8 = 4;

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Numeric(_) => EXIT_NUMERIC,
            CliError::Quadrature(_) => EXIT_QUADRATURE,
            CliError::Io { .. } | CliError::Csv(_) | CliError::Plot(_) | CliError::Check(_) => EXIT_CHECK_FAILED,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Parameter { name, reason } => CliError::Config(format!("`{name}`: {reason}")),
            CoreError::AlphaRange { .. } | CoreError::GridMismatch(_) | CoreError::Endpoint => {
                CliError::Config(e.to_string())
            }
            CoreError::Quadrature { .. } => CliError::Quadrature(e),
            _ => CliError::Numeric(e),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
