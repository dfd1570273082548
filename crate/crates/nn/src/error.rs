use hsreg_core::ErrorClass;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NnError {
    #[error("shape error: {0}")]
    Shape(String),

    #[error("invalid state: {0}")]
    State(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("training diverged: non-finite loss in epoch {epoch}")]
    Divergence { epoch: usize },

    #[error("malformed checkpoint: {0}")]
    Checkpoint(String),

    #[error("incompatible checkpoint: expected architecture `{expected}`, found `{found}`")]
    Incompatible { expected: String, found: String },

    #[error(transparent)]
    Core(#[from] hsreg_core::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, NnError>;

impl NnError {
    pub fn class(&self) -> ErrorClass {
        match self {
            NnError::Checkpoint(_) | NnError::Json(_) => ErrorClass::Parse,
            NnError::Divergence { .. } => ErrorClass::Convergence,
            NnError::Core(e) => e.class(),
            NnError::Shape(_) | NnError::State(_) | NnError::Config(_) | NnError::Incompatible { .. } => ErrorClass::Data,
        }
    }
}
