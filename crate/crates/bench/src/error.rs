use std::path::PathBuf;

use hsreg_core::ErrorClass;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("malformed report: {0}")]
    Report(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] hsreg_core::Error),

    #[error(transparent)]
    Nn(#[from] hsreg_nn::NnError),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, BenchError>;

impl BenchError {
    pub fn class(&self) -> ErrorClass {
        match self {
            BenchError::Config(_) => ErrorClass::Data,
            BenchError::Report(_) | BenchError::Json(_) => ErrorClass::Parse,
            BenchError::Io { .. } => ErrorClass::Io,
            BenchError::Core(e) => e.class(),
            BenchError::Nn(e) => e.class(),
        }
    }
}
