use credible_core::CredError;
use thiserror::Error;

/// Failure of a CLI command, classified by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags or configuration. Exit code 1.
    #[error("{0}")]
    Config(String),
    /// Unreadable or malformed input data, or unwritable output. Exit code 2.
    #[error("{0}")]
    Data(String),
    /// A numerical failure inside the analysis. Exit code 3.
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }

    pub fn io(context: impl std::fmt::Display, e: std::io::Error) -> Self {
        CliError::Data(format!("{context}: {e}"))
    }
}

impl From<CredError> for CliError {
    fn from(e: CredError) -> Self {
        let msg = e.to_string();
        match e {
            CredError::InvalidConfig(_) | CredError::InvalidRange(_) => CliError::Config(msg),
            CredError::DegenerateError { .. } => CliError::Numerical(format!(
                "{msg}; an exact-zero error makes NCI undefined, check for duplicated truth/estimate columns"
            )),
            e if e.is_numerical() => CliError::Numerical(msg),
            _ => CliError::Data(msg),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
