use std::path::PathBuf;

use thiserror::Error;

/// Failures of the experiment runner, split by the exit code they map to.
#[derive(Debug, Error)]
pub enum BenchError {
    #[error("config error: {0}")]
    Config(String),

    #[error("cannot read {path}: {source}")]
    ReadConfig {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("runtime failure: {0}")]
    Runtime(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("corrupt report: {0}")]
    Report(String),
}

impl BenchError {
    /// Process exit code: 1 for configuration problems, 2 for everything that went wrong
    /// while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Config(_) | BenchError::ReadConfig { .. } => 1,
            BenchError::Runtime(_) | BenchError::Io { .. } | BenchError::Report(_) => 2,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        BenchError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, BenchError>;
