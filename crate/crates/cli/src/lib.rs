//! Everything behind the `photostyle` binary: layered configuration, the
//! per-stage commands, deterministic SVG figures, run reports, and the
//! synthetic fixture generator used by the examples and the end-to-end
//! tests.

pub mod commands;
pub mod config;
pub mod fixture;
pub mod plot;
pub mod report;

use thiserror::Error;

/// Failure classes map straight onto exit codes: bad flags or config values
/// are usage errors (2), everything that goes wrong while running is an
/// operational error (1).
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Run(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Run(_) => 1,
        }
    }
}
