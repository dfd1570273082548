//! Per-channel batch normalization over the batch and position axes.

use rand_chacha::ChaCha8Rng;

use crate::error::{NnError, Result};
use crate::layer::{missing_cache, shape_check, Layer, Mode};
use crate::param::Param;
use crate::tensor::Batch;

pub const BN_EPS: f64 = 1e-5;
pub const BN_MOMENTUM: f64 = 0.1;

pub struct BatchNorm1d {
    pub channels: usize,
    pub momentum: f64,
    pub eps: f64,
    pub gamma: Param,
    pub beta: Param,
    running_mean_name: String,
    running_var_name: String,
    pub running_mean: Vec<f64>,
    /// Biased (population) variance estimate.
    pub running_var: Vec<f64>,
    cache: Option<BnCache>,
}

struct BnCache {
    xhat: Vec<f64>,
    inv_std: Vec<f64>,
    shape: (usize, usize, usize),
}

impl BatchNorm1d {
    pub fn new(name: &str, channels: usize) -> Self {
        Self {
            channels,
            momentum: BN_MOMENTUM,
            eps: BN_EPS,
            gamma: Param::new(format!("{name}.gamma"), vec![channels], vec![1.0; channels]),
            beta: Param::zeros(format!("{name}.beta"), vec![channels]),
            running_mean_name: format!("{name}.running_mean"),
            running_var_name: format!("{name}.running_var"),
            running_mean: vec![0.0; channels],
            running_var: vec![1.0; channels],
            cache: None,
        }
    }

    fn eval_apply(&self, x: &Batch) -> Result<Batch> {
        shape_check(x, self.channels, "batchnorm")?;
        let mut y = x.clone();
        for c in 0..self.channels {
            let scale = self.gamma.value[c] / (self.running_var[c] + self.eps).sqrt();
            let (m, b) = (self.running_mean[c], self.beta.value[c]);
            y.channel_mut(c).iter_mut().for_each(|v| *v = scale * (*v - m) + b);
        }
        Ok(y)
    }
}

impl Layer for BatchNorm1d {
    fn describe(&self) -> String {
        format!("bn({})", self.channels)
    }

    fn output_shape(&self, channels: usize, length: usize) -> Result<(usize, usize)> {
        if channels != self.channels {
            return Err(NnError::Shape(format!("batchnorm expects {} channels, got {channels}", self.channels)));
        }
        Ok((channels, length))
    }

    fn forward(&mut self, x: &Batch, mode: Mode, _rng: &mut ChaCha8Rng) -> Result<Batch> {
        if !mode.is_train() {
            self.cache = None;
            return self.eval_apply(x);
        }
        shape_check(x, self.channels, "batchnorm")?;
        if x.batch < 2 {
            return Err(NnError::Shape(format!(
                "batch normalization in training mode needs at least 2 samples, got {}",
                x.batch
            )));
        }
        let m = (x.batch * x.length) as f64;
        let mut y = x.clone();
        let mut inv_std = vec![0.0; self.channels];
        for c in 0..self.channels {
            let v = y.channel_mut(c);
            let mean = v.iter().sum::<f64>() / m;
            let var = v.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / m;
            let inv = 1.0 / (var + self.eps).sqrt();
            inv_std[c] = inv;
            v.iter_mut().for_each(|a| *a = (*a - mean) * inv);
            if mode == Mode::Train {
                self.running_mean[c] = (1.0 - self.momentum) * self.running_mean[c] + self.momentum * mean;
                self.running_var[c] = (1.0 - self.momentum) * self.running_var[c] + self.momentum * var;
            }
        }
        let xhat = y.data.clone();
        for c in 0..self.channels {
            let (g, b) = (self.gamma.value[c], self.beta.value[c]);
            y.channel_mut(c).iter_mut().for_each(|a| *a = g * *a + b);
        }
        self.cache = Some(BnCache {
            xhat,
            inv_std,
            shape: x.shape(),
        });
        Ok(y)
    }

    fn infer(&self, x: &Batch) -> Result<Batch> {
        self.eval_apply(x)
    }

    fn backward(&mut self, dy: &Batch) -> Result<Batch> {
        let cache = self.cache.as_ref().ok_or_else(|| missing_cache("batchnorm"))?;
        if dy.shape() != cache.shape {
            return Err(NnError::Shape(format!(
                "batchnorm upstream gradient is {:?}, expected {:?}",
                dy.shape(),
                cache.shape
            )));
        }
        for p in [&mut self.gamma, &mut self.beta] {
            if p.grad.len() != p.value.len() {
                p.zero_grad();
            }
        }
        let w = dy.batch * dy.length;
        let m = w as f64;
        let mut dx = dy.clone();
        for c in 0..self.channels {
            let g = dy.channel(c);
            let xh = &cache.xhat[c * w..(c + 1) * w];
            let sum_g: f64 = g.iter().sum();
            let sum_gx: f64 = g.iter().zip(xh).map(|(a, b)| a * b).sum();
            self.gamma.grad[c] += sum_gx;
            self.beta.grad[c] += sum_g;
            let k = self.gamma.value[c] * cache.inv_std[c] / m;
            for ((d, gi), xi) in dx.channel_mut(c).iter_mut().zip(g).zip(xh) {
                *d = k * (m * gi - sum_g - xi * sum_gx);
            }
        }
        Ok(dx)
    }

    fn params(&self) -> Vec<&Param> {
        vec![&self.gamma, &self.beta]
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        vec![&mut self.gamma, &mut self.beta]
    }

    fn buffers(&self) -> Vec<(String, &Vec<f64>)> {
        vec![
            (self.running_mean_name.clone(), &self.running_mean),
            (self.running_var_name.clone(), &self.running_var),
        ]
    }

    fn buffers_mut(&mut self) -> Vec<(String, &mut Vec<f64>)> {
        vec![
            (self.running_mean_name.clone(), &mut self.running_mean),
            (self.running_var_name.clone(), &mut self.running_var),
        ]
    }
}
