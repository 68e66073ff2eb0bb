use thiserror::Error;

/// Failure of a command, split by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad arguments or configuration; exit code 1.
    #[error("{0}")]
    Usage(String),
    /// Anything that went wrong while doing the work; exit code 2.
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

impl From<confpred::Error> for CliError {
    fn from(e: confpred::Error) -> Self {
        match e {
            confpred::Error::InvalidParameter { .. } => CliError::Usage(e.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}
