use std::io;
use std::process::ExitCode;

use duel_core::DuelError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] DuelError),

    #[error("{0}")]
    Usage(String),

    #[error("cannot write {0}: {1}")]
    Output(String, io::Error),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    /// Some reproduction check failed. The report has already been written.
    #[error("{0} of the acceptance criteria failed")]
    ChecksFailed(usize),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Core(DuelError::Inconsistency(_)) | CliError::ChecksFailed(_) => ExitCode::from(3),
            _ => ExitCode::from(2),
        }
    }
}
