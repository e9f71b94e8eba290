//! Experiment harness behind the `shuffle-sgd` binary.
//!
//! Commands are plain functions over a resolved [`ExperimentConfig`] so
//! integration tests can drive them without spawning a process. Exit codes
//! are a stable contract: 0 success, 1 configuration error, 2 divergence,
//! 3 acceptance-check failure.

pub mod commands;
pub mod config;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Divergence(String),
    #[error("{0}")]
    CheckFailed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Divergence(_) => 2,
            CliError::CheckFailed(_) => 3,
        }
    }

    pub fn config(err: impl std::fmt::Display) -> Self {
        CliError::Config(err.to_string())
    }
}

impl From<shuffle_sgd::RunError> for CliError {
    fn from(err: shuffle_sgd::RunError) -> Self {
        match err {
            shuffle_sgd::RunError::Diverged { .. } => CliError::Divergence(err.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<shuffle_sgd::trace::TraceError> for CliError {
    fn from(err: shuffle_sgd::trace::TraceError) -> Self {
        CliError::Config(err.to_string())
    }
}

impl From<shuffle_sgd::PlanError> for CliError {
    fn from(err: shuffle_sgd::PlanError) -> Self {
        CliError::Config(err.to_string())
    }
}

impl From<shuffle_sgd::ProblemError> for CliError {
    fn from(err: shuffle_sgd::ProblemError) -> Self {
        CliError::Config(err.to_string())
    }
}
