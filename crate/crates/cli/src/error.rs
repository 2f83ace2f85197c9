use std::path::Path;

use thiserror::Error;

/// Command failure with a stable exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),

    #[error("{0}")]
    Data(String),

    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }

    pub fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        CliError::Data(format!("{}: {e}", path.display()))
    }

    pub fn at(path: &Path, line: u64, msg: impl std::fmt::Display) -> Self {
        CliError::Data(format!("{}:{line}: {msg}", path.display()))
    }
}

impl From<jointsgl::Error> for CliError {
    fn from(e: jointsgl::Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Data(e.to_string())
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
