//! Max pooling with recorded argmaxes, and global average pooling.

use rand_chacha::ChaCha8Rng;

use crate::error::{NnError, Result};
use crate::layer::{missing_cache, Layer, Mode};
use crate::tensor::{Batch, Tensor1d};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoolKind {
    Max,
    GlobalAverage,
}

pub fn pool_output_len(length: usize, kernel: usize, stride: usize) -> Result<usize> {
    if kernel == 0 || stride == 0 {
        return Err(NnError::Config("pool kernel and stride must be positive".into()));
    }
    if kernel > length {
        return Err(NnError::Shape(format!("pool window {kernel} is larger than the input length {length}")));
    }
    Ok((length - kernel) / stride + 1)
}

pub struct MaxPool1d {
    pub kernel: usize,
    pub stride: usize,
    /// Flat input index of each output's maximum.
    argmax: Option<(Vec<usize>, (usize, usize, usize))>,
}

impl MaxPool1d {
    pub fn new(kernel: usize, stride: usize) -> Self {
        Self {
            kernel,
            stride,
            argmax: None,
        }
    }

    fn apply(&self, x: &Batch) -> Result<(Batch, Vec<usize>)> {
        let l_out = pool_output_len(x.length, self.kernel, self.stride)?;
        let mut y = Batch::zeros(x.channels, x.batch, l_out);
        let mut arg = Vec::with_capacity(y.data.len());
        for c in 0..x.channels {
            for s in 0..x.batch {
                let base = (c * x.batch + s) * x.length;
                let src = x.row(c, s);
                let dst = y.row_mut(c, s);
                for (o, d) in dst.iter_mut().enumerate() {
                    let start = o * self.stride;
                    // First maximum wins ties.
                    let mut best = start;
                    for p in start + 1..start + self.kernel {
                        if src[p] > src[best] {
                            best = p;
                        }
                    }
                    *d = src[best];
                    arg.push(base + best);
                }
            }
        }
        Ok((y, arg))
    }
}

impl Layer for MaxPool1d {
    fn describe(&self) -> String {
        format!("maxpool(k{},s{})", self.kernel, self.stride)
    }

    fn output_shape(&self, channels: usize, length: usize) -> Result<(usize, usize)> {
        Ok((channels, pool_output_len(length, self.kernel, self.stride)?))
    }

    fn forward(&mut self, x: &Batch, mode: Mode, _rng: &mut ChaCha8Rng) -> Result<Batch> {
        let (y, arg) = self.apply(x)?;
        self.argmax = mode.is_train().then_some((arg, x.shape()));
        Ok(y)
    }

    fn infer(&self, x: &Batch) -> Result<Batch> {
        Ok(self.apply(x)?.0)
    }

    fn backward(&mut self, dy: &Batch) -> Result<Batch> {
        let (arg, (c, n, l)) = self.argmax.as_ref().ok_or_else(|| missing_cache("maxpool"))?;
        if arg.len() != dy.data.len() {
            return Err(NnError::Shape("maxpool upstream gradient has the wrong size".into()));
        }
        let mut dx = Batch::zeros(*c, *n, *l);
        for (&i, g) in arg.iter().zip(&dy.data) {
            dx.data[i] += g;
        }
        Ok(dx)
    }

    fn pattern(&self, out: &mut Vec<u32>) {
        if let Some((arg, _)) = &self.argmax {
            out.extend(arg.iter().map(|&i| i as u32));
        }
    }
}

#[derive(Default)]
pub struct GlobalAvgPool {
    shape: Option<(usize, usize, usize)>,
}

impl GlobalAvgPool {
    pub fn new() -> Self {
        Self::default()
    }
}

impl Layer for GlobalAvgPool {
    fn describe(&self) -> String {
        "gap".into()
    }

    fn output_shape(&self, channels: usize, length: usize) -> Result<(usize, usize)> {
        if length == 0 {
            return Err(NnError::Shape("global average pool over an empty sequence".into()));
        }
        Ok((channels, 1))
    }

    fn forward(&mut self, x: &Batch, mode: Mode, _rng: &mut ChaCha8Rng) -> Result<Batch> {
        self.shape = mode.is_train().then_some(x.shape());
        self.infer(x)
    }

    fn infer(&self, x: &Batch) -> Result<Batch> {
        if x.length == 0 {
            return Err(NnError::Shape("global average pool over an empty sequence".into()));
        }
        let mut y = Batch::zeros(x.channels, x.batch, 1);
        for c in 0..x.channels {
            for s in 0..x.batch {
                y.row_mut(c, s)[0] = x.row(c, s).iter().sum::<f64>() / x.length as f64;
            }
        }
        Ok(y)
    }

    fn backward(&mut self, dy: &Batch) -> Result<Batch> {
        let (c, n, l) = self.shape.ok_or_else(|| missing_cache("global average pool"))?;
        if dy.shape() != (c, n, 1) {
            return Err(NnError::Shape("global average pool upstream gradient has the wrong shape".into()));
        }
        let mut dx = Batch::zeros(c, n, l);
        for ch in 0..c {
            for s in 0..n {
                let g = dy.row(ch, s)[0] / l as f64;
                dx.row_mut(ch, s).iter_mut().for_each(|v| *v = g);
            }
        }
        Ok(dx)
    }
}

/// Single-sample pooling. `kernel` and `stride` are ignored for the global
/// average.
pub fn pool1d(input: &Tensor1d, kind: PoolKind, kernel: usize, stride: usize) -> Result<Tensor1d> {
    let x = Batch::stack(std::slice::from_ref(input))?;
    let y = match kind {
        PoolKind::Max => MaxPool1d::new(kernel, stride).infer(&x)?,
        PoolKind::GlobalAverage => GlobalAvgPool::new().infer(&x)?,
    };
    Ok(y.sample(0))
}
