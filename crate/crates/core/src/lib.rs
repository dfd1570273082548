//! Hyperspectral quality-regression toolkit: data types, ENVI ingestion,
//! reflectance calibration, spectral preprocessing and the classical
//! regressors (SVR, KNN, AdaBoost.R2, PLSR).
//!
//! The convolutional network lives in `hsreg-nn`; the synthetic benchmark
//! in `hsreg-bench`.

pub mod calibration;
pub mod classical;
pub mod envi;
pub mod error;
pub mod metrics;
pub mod preprocess;
pub mod split;
pub mod spectrum;
pub mod stats;
pub mod table_csv;

pub use error::{Error, ErrorClass, Result};
pub use metrics::{mse, r_squared};
pub use preprocess::{PreprocessKind, Preprocessor};
pub use spectrum::{SpectraTable, Spectrum, TargetKind};
pub use split::{split_dataset, SplitIndices};
pub use stats::{summary_stats, SummaryStats};
