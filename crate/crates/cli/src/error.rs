use thiserror::Error;

/// Failure of a CLI run, mapped onto the process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }

    /// Core error with the row or cell it came from.
    pub fn core(context: impl std::fmt::Display, e: prs_core::Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(format!("{context}: {e}"))
        } else {
            CliError::Config(format!("{context}: {e}"))
        }
    }
}

impl From<prs_core::Error> for CliError {
    fn from(e: prs_core::Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Config(e.to_string())
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
