//! Synthetic spectra with known targets, fitted preprocessing-plus-model
//! pipelines, and the benchmark grid over models, preprocessing and sample
//! sizes.

pub mod error;
pub mod harness;
pub mod pipeline;
pub mod report;
pub mod synth;

pub use error::{BenchError, Result};
pub use harness::{default_grid, run_benchmark, run_cell, AccessEvent, BenchSettings, Cell, Phase};
pub use pipeline::{fit_pipeline, FittedPipeline, ModelChoice, PipelineSettings};
pub use report::{BenchmarkReport, CellFailure, PlotPoint, ReportRow};
pub use synth::{generate_synthetic_dataset, render_spectrum, SampleLatents, SynthConfig};
