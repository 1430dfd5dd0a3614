use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Malformed { path: PathBuf, message: String },
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Numerical(String),
    #[error("fit stopped after {iterations} iterations without converging (model written)")]
    NotConverged { iterations: usize },
}

impl CliError {
    /// 0 ok, 1 I/O or malformed input, 2 validation, 3 non-convergence or
    /// numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } | CliError::Malformed { .. } => 1,
            CliError::Validation(_) => 2,
            CliError::NotConverged { .. } | CliError::Numerical(_) => 3,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn malformed(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        CliError::Malformed {
            path: path.into(),
            message: message.to_string(),
        }
    }

    pub(crate) fn validation(message: impl ToString) -> Self {
        CliError::Validation(message.to_string())
    }
}
