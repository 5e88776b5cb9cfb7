use std::process::ExitCode;

use thiserror::Error;

/// Exit status for a successful run whose checks all passed.
pub const EXIT_PASS: u8 = 0;
/// The run completed but a check failed.
pub const EXIT_CHECK_FAILED: u8 = 1;
/// Invalid input, configuration or construction parameters.
pub const EXIT_INPUT: u8 = 2;
/// A numerical routine failed (no convergence, rank collapse, …).
pub const EXIT_NUMERICAL: u8 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] quasireal::Error),

    #[error("configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Core(e) if e.is_numerical() => ExitCode::from(EXIT_NUMERICAL),
            _ => ExitCode::from(EXIT_INPUT),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
