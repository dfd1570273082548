//! ReLU and inverted dropout.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{NnError, Result};
use crate::layer::{missing_cache, Layer, Mode};
use crate::tensor::Batch;

/// Elementwise `max(0, x)`; the subgradient at 0 is 0.
pub fn relu(x: &[f64]) -> Vec<f64> {
    x.iter().map(|&v| if v > 0.0 { v } else { 0.0 }).collect()
}

#[derive(Default)]
pub struct Relu {
    mask: Option<Vec<bool>>,
}

impl Relu {
    pub fn new() -> Self {
        Self::default()
    }
}

impl Layer for Relu {
    fn describe(&self) -> String {
        "relu".into()
    }

    fn output_shape(&self, channels: usize, length: usize) -> Result<(usize, usize)> {
        Ok((channels, length))
    }

    fn forward(&mut self, x: &Batch, mode: Mode, _rng: &mut ChaCha8Rng) -> Result<Batch> {
        self.mask = mode.is_train().then(|| x.data.iter().map(|&v| v > 0.0).collect());
        self.infer(x)
    }

    fn infer(&self, x: &Batch) -> Result<Batch> {
        Ok(Batch {
            data: relu(&x.data),
            ..*x
        })
    }

    fn backward(&mut self, dy: &Batch) -> Result<Batch> {
        let mask = self.mask.as_ref().ok_or_else(|| missing_cache("relu"))?;
        if mask.len() != dy.data.len() {
            return Err(NnError::Shape("relu upstream gradient has the wrong size".into()));
        }
        Ok(Batch {
            data: dy.data.iter().zip(mask).map(|(&g, &m)| if m { g } else { 0.0 }).collect(),
            ..*dy
        })
    }

    fn pattern(&self, out: &mut Vec<u32>) {
        if let Some(m) = &self.mask {
            out.extend(m.iter().map(|&b| b as u32));
        }
    }
}

/// Inverted dropout on a flat array: zero with probability `p`, scale
/// survivors by `1/(1−p)`. Returns the output and the keep mask.
pub fn dropout_apply(x: &[f64], p: f64, train: bool, rng: &mut impl Rng) -> Result<(Vec<f64>, Vec<bool>)> {
    if !(0.0..1.0).contains(&p) {
        return Err(NnError::Config(format!("dropout probability must be in [0, 1), got {p}")));
    }
    if !train || p == 0.0 {
        return Ok((x.to_vec(), vec![true; x.len()]));
    }
    let scale = 1.0 / (1.0 - p);
    let mask: Vec<bool> = x.iter().map(|_| rng.random::<f64>() >= p).collect();
    let y = x.iter().zip(&mask).map(|(&v, &k)| if k { v * scale } else { 0.0 }).collect();
    Ok((y, mask))
}

pub struct Dropout {
    pub p: f64,
    /// Keep mask and survivor scale of the last training forward.
    mask: Option<(Vec<bool>, f64)>,
}

impl Dropout {
    pub fn new(p: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&p) {
            return Err(NnError::Config(format!("dropout probability must be in [0, 1), got {p}")));
        }
        Ok(Self { p, mask: None })
    }
}

impl Layer for Dropout {
    fn describe(&self) -> String {
        format!("dropout({})", self.p)
    }

    fn output_shape(&self, channels: usize, length: usize) -> Result<(usize, usize)> {
        Ok((channels, length))
    }

    fn forward(&mut self, x: &Batch, mode: Mode, rng: &mut ChaCha8Rng) -> Result<Batch> {
        let active = mode == Mode::Train;
        let (data, mask) = dropout_apply(&x.data, self.p, active, rng)?;
        let scale = if active { 1.0 / (1.0 - self.p) } else { 1.0 };
        self.mask = mode.is_train().then_some((mask, scale));
        Ok(Batch { data, ..*x })
    }

    fn infer(&self, x: &Batch) -> Result<Batch> {
        Ok(x.clone())
    }

    fn backward(&mut self, dy: &Batch) -> Result<Batch> {
        let (mask, scale) = self.mask.as_ref().ok_or_else(|| missing_cache("dropout"))?;
        if mask.len() != dy.data.len() {
            return Err(NnError::Shape("dropout upstream gradient has the wrong size".into()));
        }
        Ok(Batch {
            data: dy.data.iter().zip(mask).map(|(&g, &k)| if k { g * scale } else { 0.0 }).collect(),
            ..*dy
        })
    }
}
