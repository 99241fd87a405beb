//! Experiment harness behind the `deltaflow` binary: config parsing,
//! experiment runners, physics cross-checks, report writers and golden-file
//! regression.

pub mod config;
pub mod experiments;
pub mod golden;
pub mod output;
pub mod physics;
pub mod plot;

use thiserror::Error;

pub use config::{Experiment, ExperimentConfig};
pub use experiments::{run_experiment, Outcome, Verdict};

/// Process exit statuses.
pub mod exit {
    pub const PASS: i32 = 0;
    pub const VERDICT_FAILED: i32 = 1;
    pub const INVALID_CONFIG: i32 = 2;
    pub const TAIL_NOT_CERTIFIED: i32 = 3;
    pub const OTHER: i32 = 4;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Core(#[from] deltaflow::Error),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } | CliError::InvalidConfig(_) => exit::INVALID_CONFIG,
            CliError::Core(
                deltaflow::Error::InvalidGrid(_)
                | deltaflow::Error::InvalidConfig(_)
                | deltaflow::Error::InvalidMollifier(_)
                | deltaflow::Error::Parse { .. },
            ) => exit::INVALID_CONFIG,
            CliError::Core(deltaflow::Error::TailNotCertified(_)) => exit::TAIL_NOT_CERTIFIED,
            _ => exit::OTHER,
        }
    }
}
