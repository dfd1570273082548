//! Concrete layers.

mod activation;
mod conv;
mod linear;
mod norm;
mod pool;
mod residual;

pub use activation::{dropout_apply, relu, Dropout, Relu};
pub use conv::{conv1d_forward, conv_output_len, Conv1d};
pub use linear::{linear_forward, Linear};
pub use norm::{BatchNorm1d, BN_EPS, BN_MOMENTUM};
pub use pool::{pool1d, pool_output_len, GlobalAvgPool, MaxPool1d, PoolKind};
pub use residual::Residual;

use rand::Rng;
use rand_distr::{Distribution, Normal};

/// He-normal values: `N(0, 2 / fan_in)`.
pub fn he_normal(n: usize, fan_in: usize, rng: &mut impl Rng) -> Vec<f64> {
    let dist = Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).expect("positive std");
    (0..n).map(|_| dist.sample(rng)).collect()
}
