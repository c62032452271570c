use krig_core::Error;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Unreadable or malformed input.
    #[error("{0}")]
    Parse(String),

    #[error(transparent)]
    Core(#[from] Error),

    #[error("{0}")]
    Output(String),
}

impl CliError {
    pub fn parse(context: impl std::fmt::Display, e: impl std::fmt::Display) -> Self {
        CliError::Parse(format!("{context}: {e}"))
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Parse(_) => 2,
            CliError::Core(Error::NonUniqueStationary(_)) => 3,
            CliError::Core(Error::Io(_)) | CliError::Output(_) => 1,
            CliError::Core(_) => 4,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Output(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Output(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Output(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
