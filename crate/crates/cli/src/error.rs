use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {message}")]
    Config { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Dataset { path: PathBuf, line: u64, message: String },

    #[error("{0}")]
    Usage(String),

    /// Two datasets that cannot be compared.
    #[error("incompatible datasets: {0}")]
    Incompatible(String),

    #[error(transparent)]
    Core(#[from] disperkit::Error),

    #[error("writing diagnostics: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io { path: path.into(), source }
    }

    pub(crate) fn config(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Self::Config { path: path.into(), message: message.into() }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
