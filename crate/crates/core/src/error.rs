//! Error type shared by every module of the core crate.

use thiserror::Error;

/// Errors raised by spectral data handling and the classical regressors.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("target has zero variance; R² is undefined")]
    ConstantTarget,

    #[error("too few samples: need at least {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("empty input: {0}")]
    Empty(String),

    #[error("invalid spectrum: {0}")]
    InvalidSpectrum(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("missing mandatory header key `{0}`")]
    MissingKey(String),

    #[error("unsupported value for `{key}`: {value}")]
    Unsupported { key: String, value: String },

    #[error("truncated cube payload: expected {expected} bytes, got {actual}")]
    Truncated { expected: usize, actual: usize },

    #[error("csv parse error at row {row}{}: {msg}", column.map(|c| format!(", column {c}")).unwrap_or_default())]
    Csv {
        row: usize,
        column: Option<usize>,
        msg: String,
    },

    #[error("degenerate reference at band {band}: white - dark = {gap:e}")]
    DegenerateReference { band: usize, gap: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("solver did not converge after {iterations} iterations (KKT violation {violation:e})")]
    Convergence { iterations: usize, violation: f64 },

    #[error("invalid hyperparameter: {0}")]
    Hyperparameter(String),

    #[error("model format: {0}")]
    ModelFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse classification used to map failures onto process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Parse,
    Data,
    Convergence,
    Io,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Parse { .. }
            | Error::MissingKey(_)
            | Error::Unsupported { .. }
            | Error::Csv { .. }
            | Error::ModelFormat(_)
            | Error::Json(_) => ErrorClass::Parse,
            Error::Convergence { .. } => ErrorClass::Convergence,
            Error::Io(_) => ErrorClass::Io,
            _ => ErrorClass::Data,
        }
    }
}
