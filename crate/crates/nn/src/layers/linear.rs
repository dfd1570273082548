//! Fully connected layer over the channel axis of length-1 batches.

use rand_chacha::ChaCha8Rng;

use super::he_normal;
use crate::error::{NnError, Result};
use crate::layer::{missing_cache, shape_check, Layer, Mode};
use crate::param::Param;
use crate::tensor::Batch;

pub struct Linear {
    pub n_in: usize,
    pub n_out: usize,
    /// `[n_out][n_in]`.
    pub weight: Param,
    pub bias: Param,
    input: Option<Batch>,
}

impl Linear {
    pub fn new(name: &str, n_in: usize, n_out: usize, rng: &mut ChaCha8Rng) -> Self {
        Self::from_weights(name, n_in, n_out, he_normal(n_in * n_out, n_in, rng), vec![0.0; n_out])
    }

    pub fn from_weights(name: &str, n_in: usize, n_out: usize, weight: Vec<f64>, bias: Vec<f64>) -> Self {
        Self {
            n_in,
            n_out,
            weight: Param::new(format!("{name}.weight"), vec![n_out, n_in], weight),
            bias: Param::new(format!("{name}.bias"), vec![n_out], bias),
            input: None,
        }
    }

    fn check(&self, x: &Batch) -> Result<()> {
        shape_check(x, self.n_in, "linear")?;
        if x.length != 1 {
            return Err(NnError::Shape(format!("linear expects length-1 inputs, got length {}", x.length)));
        }
        Ok(())
    }
}

impl Layer for Linear {
    fn describe(&self) -> String {
        format!("linear({}>{})", self.n_in, self.n_out)
    }

    fn output_shape(&self, channels: usize, length: usize) -> Result<(usize, usize)> {
        if channels != self.n_in || length != 1 {
            return Err(NnError::Shape(format!(
                "linear expects {}×1 inputs, got {channels}×{length}",
                self.n_in
            )));
        }
        Ok((self.n_out, 1))
    }

    fn forward(&mut self, x: &Batch, mode: Mode, _rng: &mut ChaCha8Rng) -> Result<Batch> {
        let y = self.infer(x)?;
        self.input = mode.is_train().then(|| x.clone());
        Ok(y)
    }

    fn infer(&self, x: &Batch) -> Result<Batch> {
        self.check(x)?;
        let n = x.batch;
        let mut y = Batch::zeros(self.n_out, n, 1);
        for o in 0..self.n_out {
            let w = &self.weight.value[o * self.n_in..(o + 1) * self.n_in];
            for s in 0..n {
                let mut acc = self.bias.value[o];
                for (i, wi) in w.iter().enumerate() {
                    acc += wi * x.data[i * n + s];
                }
                y.data[o * n + s] = acc;
            }
        }
        Ok(y)
    }

    fn backward(&mut self, dy: &Batch) -> Result<Batch> {
        let x = self.input.as_ref().ok_or_else(|| missing_cache("linear"))?;
        let n = x.batch;
        if dy.shape() != (self.n_out, n, 1) {
            return Err(NnError::Shape("linear upstream gradient has the wrong shape".into()));
        }
        for p in [&mut self.weight, &mut self.bias] {
            if p.grad.len() != p.value.len() {
                p.zero_grad();
            }
        }
        let mut dx = Batch::zeros(self.n_in, n, 1);
        for o in 0..self.n_out {
            for s in 0..n {
                let g = dy.data[o * n + s];
                self.bias.grad[o] += g;
                for i in 0..self.n_in {
                    self.weight.grad[o * self.n_in + i] += g * x.data[i * n + s];
                    dx.data[i * n + s] += g * self.weight.value[o * self.n_in + i];
                }
            }
        }
        Ok(dx)
    }

    fn params(&self) -> Vec<&Param> {
        vec![&self.weight, &self.bias]
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        vec![&mut self.weight, &mut self.bias]
    }
}

/// `W x + b` for a single vector, `W` row-major `[out][in]`.
pub fn linear_forward(x: &[f64], w: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    let n_out = b.len();
    if n_out == 0 || w.len() != n_out * x.len() {
        return Err(NnError::Shape(format!(
            "weight has {} entries for {} inputs and {n_out} outputs",
            w.len(),
            x.len()
        )));
    }
    Ok(w.chunks(x.len())
        .zip(b)
        .map(|(row, bi)| row.iter().zip(x).map(|(a, v)| a * v).sum::<f64>() + bi)
        .collect())
}
