use std::path::PathBuf;

use thiserror::Error;

/// Failures of a run, each mapped to one exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error at `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("numerical failure in {stage}: {source}")]
    Numerical {
        stage: String,
        #[source]
        source: regge_core::Error,
    },

    /// A run that finished with partial results (e.g. a truncated trajectory).
    #[error("numerical failure: {0}")]
    Incomplete(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Config { key: key.into(), message: message.into() }
    }

    pub fn numerical(stage: impl Into<String>, source: regge_core::Error) -> Self {
        CliError::Numerical { stage: stage.into(), source }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config { .. } => 1,
            CliError::Numerical { .. } | CliError::Incomplete(_) => 2,
            CliError::Io { .. } => 3,
        }
    }
}
