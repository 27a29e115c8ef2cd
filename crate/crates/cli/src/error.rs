use std::process::ExitCode;

use thiserror::Error;

use hdpan_core::models::CheckpointError;
use hdpan_core::{DataError, ShapeError, TrainError};

/// Failure of one command, classified by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad command line or config file (exit 1).
    #[error("config: {0}")]
    Config(String),
    /// Missing or malformed data, checkpoints, or outputs (exit 2).
    #[error("data: {0}")]
    Data(String),
    /// Training produced non-finite values (exit 3).
    #[error("numeric: {0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Config(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numeric(_) => 3,
        })
    }

    pub fn io(what: impl std::fmt::Display, e: std::io::Error) -> Self {
        CliError::Data(format!("{what}: {e}"))
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<CheckpointError> for CliError {
    fn from(e: CheckpointError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::Config(_) => CliError::Config(e.to_string()),
            TrainError::Data(_) | TrainError::Shape(_) => CliError::Data(e.to_string()),
            TrainError::NonFinite { .. } | TrainError::Divergence(_) => CliError::Numeric(e.to_string()),
        }
    }
}

impl From<ShapeError> for CliError {
    fn from(e: ShapeError) -> Self {
        CliError::Data(e.to_string())
    }
}
