//! The layer interface and sequential composition.

use rand_chacha::ChaCha8Rng;

use crate::error::{NnError, Result};
use crate::param::Param;
use crate::tensor::Batch;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Batch statistics, dropout active, running statistics updated.
    Train,
    /// Batch statistics without dropout; used by gradient checks.
    TrainNoDropout,
    /// Running statistics, dropout off, nothing cached.
    Eval,
}

impl Mode {
    pub fn is_train(self) -> bool {
        !matches!(self, Mode::Eval)
    }
}

/// A differentiable block.
///
/// `forward` caches whatever `backward` needs; `infer` is the pure
/// evaluation-mode path and never mutates the layer.
pub trait Layer: Send + Sync {
    /// Stable description of the architecture, used for checkpoint fingerprints.
    fn describe(&self) -> String;

    /// Output `(channels, length)` for an input of the given geometry.
    fn output_shape(&self, channels: usize, length: usize) -> Result<(usize, usize)>;

    fn forward(&mut self, x: &Batch, mode: Mode, rng: &mut ChaCha8Rng) -> Result<Batch>;

    fn infer(&self, x: &Batch) -> Result<Batch>;

    /// Accumulates parameter gradients and returns the input gradient.
    fn backward(&mut self, dy: &Batch) -> Result<Batch>;

    fn params(&self) -> Vec<&Param> {
        Vec::new()
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        Vec::new()
    }

    /// Non-trainable state that belongs in a checkpoint (running statistics).
    fn buffers(&self) -> Vec<(String, &Vec<f64>)> {
        Vec::new()
    }

    fn buffers_mut(&mut self) -> Vec<(String, &mut Vec<f64>)> {
        Vec::new()
    }

    /// Appends the discrete choices of the last forward pass (relu signs,
    /// pool argmaxes); finite differences are only valid where these agree.
    fn pattern(&self, _out: &mut Vec<u32>) {}
}

pub(crate) fn shape_check(x: &Batch, channels: usize, who: &str) -> Result<()> {
    if x.channels != channels {
        return Err(NnError::Shape(format!(
            "{who} expects {channels} input channels, got {}",
            x.channels
        )));
    }
    Ok(())
}

pub(crate) fn missing_cache(who: &str) -> NnError {
    NnError::State(format!("{who}: backward called before a training-mode forward"))
}

/// Layers applied in order.
#[derive(Default)]
pub struct Sequential {
    layers: Vec<Box<dyn Layer>>,
}

impl Sequential {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, layer: impl Layer + 'static) {
        self.layers.push(Box::new(layer));
    }

    pub fn with(mut self, layer: impl Layer + 'static) -> Self {
        self.push(layer);
        self
    }

    pub fn len(&self) -> usize {
        self.layers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }

    pub fn layers(&self) -> &[Box<dyn Layer>] {
        &self.layers
    }

    pub fn zero_grad(&mut self) {
        for p in self.params_mut() {
            p.zero_grad();
        }
    }

    pub fn parameter_count(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }
}

impl Layer for Sequential {
    fn describe(&self) -> String {
        let parts: Vec<String> = self.layers.iter().map(|l| l.describe()).collect();
        format!("[{}]", parts.join(","))
    }

    fn output_shape(&self, mut channels: usize, mut length: usize) -> Result<(usize, usize)> {
        for l in &self.layers {
            (channels, length) = l.output_shape(channels, length)?;
        }
        Ok((channels, length))
    }

    fn forward(&mut self, x: &Batch, mode: Mode, rng: &mut ChaCha8Rng) -> Result<Batch> {
        let mut iter = self.layers.iter_mut();
        let Some(first) = iter.next() else {
            return Ok(x.clone());
        };
        let mut h = first.forward(x, mode, rng)?;
        for l in iter {
            h = l.forward(&h, mode, rng)?;
        }
        Ok(h)
    }

    fn infer(&self, x: &Batch) -> Result<Batch> {
        let mut iter = self.layers.iter();
        let Some(first) = iter.next() else {
            return Ok(x.clone());
        };
        let mut h = first.infer(x)?;
        for l in iter {
            h = l.infer(&h)?;
        }
        Ok(h)
    }

    fn backward(&mut self, dy: &Batch) -> Result<Batch> {
        let mut iter = self.layers.iter_mut().rev();
        let Some(last) = iter.next() else {
            return Ok(dy.clone());
        };
        let mut g = last.backward(dy)?;
        for l in iter {
            g = l.backward(&g)?;
        }
        Ok(g)
    }

    fn params(&self) -> Vec<&Param> {
        self.layers.iter().flat_map(|l| l.params()).collect()
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        self.layers.iter_mut().flat_map(|l| l.params_mut()).collect()
    }

    fn buffers(&self) -> Vec<(String, &Vec<f64>)> {
        self.layers.iter().flat_map(|l| l.buffers()).collect()
    }

    fn buffers_mut(&mut self) -> Vec<(String, &mut Vec<f64>)> {
        self.layers.iter_mut().flat_map(|l| l.buffers_mut()).collect()
    }

    fn pattern(&self, out: &mut Vec<u32>) {
        for l in &self.layers {
            l.pattern(out);
        }
    }
}
