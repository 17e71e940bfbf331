//! File formats, orchestration and the command-line surface of `frachp`.
//!
//! Runs are described by a TOML [`RunSpec`](config::RunSpec); trajectories
//! are written as CSV ([`table`]) and optionally charted as SVG ([`plot`]).

pub mod commands;
pub mod config;
pub mod error;
pub mod plot;
pub mod table;

pub use commands::Overrides;
pub use config::RunSpec;
pub use error::{CliError, CliResult};
