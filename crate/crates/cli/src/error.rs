use std::process::ExitCode;

use thiserror::Error;

use crate::document::DocumentError;

/// Exit code contract: 0 success, 1 failed consistency check, 2 bad input or usage.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Document { path: String, source: DocumentError },
    #[error("{path}: {message}")]
    Input { path: String, message: String },
    #[error("{0}")]
    Io(#[from] std::io::Error),
    /// The report was written; at least one check failed.
    #[error("{0}")]
    Consistency(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Consistency(_) => 1,
            _ => 2,
        }
    }
}

impl From<&CliError> for ExitCode {
    fn from(e: &CliError) -> Self {
        ExitCode::from(e.exit_code())
    }
}
