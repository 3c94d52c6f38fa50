use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("config {origin}: {msg}")]
    Config { origin: String, msg: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {msg}")]
    Data { path: PathBuf, msg: String },

    #[error(transparent)]
    Core(#[from] tsrecon::Error),

    #[error("replay mismatch: {0}")]
    Replay(String),
}

impl CliError {
    /// 1 for usage and configuration problems, 2 for everything that went
    /// wrong while running.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Config { .. } => 1,
            _ => 2,
        }
    }

    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }

    pub fn config(origin: impl Into<String>, msg: impl Into<String>) -> CliError {
        CliError::Config {
            origin: origin.into(),
            msg: msg.into(),
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
