//! A minimal 64-bit neural-network layer library with hand-written backward
//! passes, Adam and a finite-difference gradient checker, plus the
//! Con1dResNet spectral regressor built on it.
//!
//! Activations are stored channel-major across the whole mini-batch
//! (`[channel][sample][position]`), so each convolution is a single GEMM.

pub mod adam;
pub mod checkpoint;
pub mod error;
pub mod gradcheck;
mod gemm;
pub mod layer;
pub mod layers;
pub mod loss;
pub mod param;
pub mod resnet;
pub mod rng;
pub mod tensor;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use error::{NnError, Result};
pub use gradcheck::{gradient_check, GradCheckConfig, GradCheckReport, GradObjective, SupervisedObjective};
pub use layer::{Layer, Mode, Sequential};
pub use loss::mse_loss;
pub use param::Param;
pub use resnet::{ArchitectureConfig, Con1dResNet, SavedModel, ShapeLedger, TrainConfig, TrainHistory};
pub use tensor::{Batch, Tensor1d};
