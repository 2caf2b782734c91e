//! Error types shared across the crate.

use thiserror::Error;

/// Invalid configuration or data file.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid configuration: {0}")]
    Invalid(String),

    #[error("malformed table at line {line}: {reason}")]
    Table { line: usize, reason: String },
}

/// Failures of the exhaustive solver.
#[derive(Debug, Error)]
pub enum OracleError {
    #[error(
        "search space too large: {candidates} candidate evaluations exceed the budget of {budget}; coarsen the grid or raise bw_step"
    )]
    SearchSpaceTooLarge { candidates: u128, budget: u64 },

    #[error("invalid oracle configuration: {0}")]
    Invalid(String),
}

/// Failures during training.
#[derive(Debug, Error)]
pub enum TrainError {
    #[error("non-finite loss at step {step} (agent {agent}): {detail}")]
    NonFiniteLoss {
        step: u64,
        agent: String,
        detail: String,
    },

    #[error(transparent)]
    Config(#[from] ConfigError),
}

/// Failures reading or writing checkpoint files.
#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("bad checkpoint at line {line}: {reason}")]
    Format { line: usize, reason: String },

    #[error("unsupported checkpoint version: {0}")]
    Version(String),
}
