//! Batch front-end for `pseudowave-core`: JSON configs, CSV output, a worker
//! pool for sweeps and scans, and the acceptance self-test.

pub mod commands;
pub mod config;
pub mod csvio;
pub mod parallel;
pub mod selftest;

/// Failure classes, mapped to process exit codes.
#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(#[from] pseudowave_core::Error),
    #[error("output error: {0}")]
    Io(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::Io(_) => 1,
            RunError::Numerical(_) => 2,
        }
    }
}
