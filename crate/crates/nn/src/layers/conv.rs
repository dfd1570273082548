//! 1-D cross-correlation through im2col and one GEMM per batch.

use rand_chacha::ChaCha8Rng;

use super::he_normal;
use crate::error::{NnError, Result};
use crate::gemm::{gemm, View};
use crate::layer::{missing_cache, shape_check, Layer, Mode};
use crate::param::Param;
use crate::tensor::{Batch, Tensor1d};

/// `floor((L + 2·pad − k) / stride) + 1`, or an error when the window does
/// not fit.
pub fn conv_output_len(length: usize, kernel: usize, stride: usize, pad: usize) -> Result<usize> {
    if stride == 0 || kernel == 0 {
        return Err(NnError::Config("kernel and stride must be positive".into()));
    }
    let padded = length + 2 * pad;
    if padded < kernel {
        return Err(NnError::Shape(format!(
            "conv output length is non-positive: L={length}, pad={pad}, k={kernel}, stride={stride}"
        )));
    }
    Ok((padded - kernel) / stride + 1)
}

pub struct Conv1d {
    pub c_in: usize,
    pub c_out: usize,
    pub kernel: usize,
    pub stride: usize,
    pub pad: usize,
    /// `[c_out][c_in][k]`.
    pub weight: Param,
    pub bias: Option<Param>,
    cache: Option<ConvCache>,
}

struct ConvCache {
    cols: Vec<f64>,
    batch: usize,
    l_in: usize,
    l_out: usize,
}

impl Conv1d {
    /// He-normal weights and (optionally) a zero bias.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: &str,
        c_in: usize,
        c_out: usize,
        kernel: usize,
        stride: usize,
        pad: usize,
        bias: bool,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let w = he_normal(c_out * c_in * kernel, c_in * kernel, rng);
        Self {
            c_in,
            c_out,
            kernel,
            stride,
            pad,
            weight: Param::new(format!("{name}.weight"), vec![c_out, c_in, kernel], w),
            bias: bias.then(|| Param::zeros(format!("{name}.bias"), vec![c_out])),
            cache: None,
        }
    }

    fn im2col(&self, x: &Batch, l_out: usize) -> Vec<f64> {
        let (n, l_in, k) = (x.batch, x.length, self.kernel);
        let width = n * l_out;
        let mut cols = vec![0.0; self.c_in * k * width];
        for ci in 0..self.c_in {
            for kk in 0..k {
                let dst = &mut cols[(ci * k + kk) * width..(ci * k + kk + 1) * width];
                for s in 0..n {
                    let src = x.row(ci, s);
                    for o in 0..l_out {
                        let p = (o * self.stride + kk) as isize - self.pad as isize;
                        if p >= 0 && (p as usize) < l_in {
                            dst[s * l_out + o] = src[p as usize];
                        }
                    }
                }
            }
        }
        cols
    }

    fn apply(&self, x: &Batch) -> Result<(Vec<f64>, Batch)> {
        shape_check(x, self.c_in, "conv1d")?;
        let l_out = conv_output_len(x.length, self.kernel, self.stride, self.pad)?;
        let cols = self.im2col(x, l_out);
        let width = x.batch * l_out;
        let mut y = Batch::zeros(self.c_out, x.batch, l_out);
        gemm(
            View::row_major(&self.weight.value, self.c_out, self.c_in * self.kernel),
            View::row_major(&cols, self.c_in * self.kernel, width),
            0.0,
            &mut y.data,
        );
        if let Some(b) = &self.bias {
            for (co, bv) in b.value.iter().enumerate() {
                y.channel_mut(co).iter_mut().for_each(|v| *v += bv);
            }
        }
        Ok((cols, y))
    }
}

impl Layer for Conv1d {
    fn describe(&self) -> String {
        format!(
            "conv1d({}>{},k{},s{},p{}{})",
            self.c_in,
            self.c_out,
            self.kernel,
            self.stride,
            self.pad,
            if self.bias.is_some() { ",bias" } else { "" }
        )
    }

    fn output_shape(&self, channels: usize, length: usize) -> Result<(usize, usize)> {
        if channels != self.c_in {
            return Err(NnError::Shape(format!("conv1d expects {} channels, got {channels}", self.c_in)));
        }
        Ok((self.c_out, conv_output_len(length, self.kernel, self.stride, self.pad)?))
    }

    fn forward(&mut self, x: &Batch, mode: Mode, _rng: &mut ChaCha8Rng) -> Result<Batch> {
        let (cols, y) = self.apply(x)?;
        self.cache = mode.is_train().then_some(ConvCache {
            cols,
            batch: x.batch,
            l_in: x.length,
            l_out: y.length,
        });
        Ok(y)
    }

    fn infer(&self, x: &Batch) -> Result<Batch> {
        Ok(self.apply(x)?.1)
    }

    fn backward(&mut self, dy: &Batch) -> Result<Batch> {
        let cache = self.cache.as_ref().ok_or_else(|| missing_cache("conv1d"))?;
        let (n, l_out, k) = (cache.batch, cache.l_out, self.kernel);
        if dy.shape() != (self.c_out, n, l_out) {
            return Err(NnError::Shape(format!(
                "conv1d upstream gradient is {:?}, expected {:?}",
                dy.shape(),
                (self.c_out, n, l_out)
            )));
        }
        let width = n * l_out;
        let rows = self.c_in * k;
        if self.weight.grad.len() != self.weight.value.len() {
            self.weight.zero_grad();
        }
        // dW += dY · colsᵀ
        gemm(
            View::row_major(&dy.data, self.c_out, width),
            View::row_major(&cache.cols, rows, width).t(),
            1.0,
            &mut self.weight.grad,
        );
        if let Some(b) = &mut self.bias {
            if b.grad.len() != b.value.len() {
                b.zero_grad();
            }
            for (co, g) in b.grad.iter_mut().enumerate() {
                *g += dy.channel(co).iter().sum::<f64>();
            }
        }
        // dcols = Wᵀ · dY, then scatter back onto the input positions.
        let mut dcols = vec![0.0; rows * width];
        gemm(
            View::row_major(&self.weight.value, self.c_out, rows).t(),
            View::row_major(&dy.data, self.c_out, width),
            0.0,
            &mut dcols,
        );
        let mut dx = Batch::zeros(self.c_in, n, cache.l_in);
        for ci in 0..self.c_in {
            for kk in 0..k {
                let src = &dcols[(ci * k + kk) * width..(ci * k + kk + 1) * width];
                for s in 0..n {
                    let dst = dx.row_mut(ci, s);
                    for o in 0..l_out {
                        let p = (o * self.stride + kk) as isize - self.pad as isize;
                        if p >= 0 && (p as usize) < cache.l_in {
                            dst[p as usize] += src[s * l_out + o];
                        }
                    }
                }
            }
        }
        Ok(dx)
    }

    fn params(&self) -> Vec<&Param> {
        std::iter::once(&self.weight).chain(self.bias.as_ref()).collect()
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        std::iter::once(&mut self.weight).chain(self.bias.as_mut()).collect()
    }
}

/// Single-sample convolution with weights `[c_out][c_in][k]`.
pub fn conv1d_forward(
    input: &Tensor1d,
    weights: &[f64],
    bias: &[f64],
    c_out: usize,
    kernel: usize,
    stride: usize,
    pad: usize,
) -> Result<Tensor1d> {
    let c_in = input.channels();
    if weights.len() != c_out * c_in * kernel {
        return Err(NnError::Shape(format!(
            "{} weights for {c_out}×{c_in}×{kernel}",
            weights.len()
        )));
    }
    if bias.len() != c_out {
        return Err(NnError::Shape(format!("{} biases for {c_out} output channels", bias.len())));
    }
    let conv = Conv1d {
        c_in,
        c_out,
        kernel,
        stride,
        pad,
        weight: Param::new("w", vec![c_out, c_in, kernel], weights.to_vec()),
        bias: Some(Param::new("b", vec![c_out], bias.to_vec())),
        cache: None,
    };
    let y = conv.infer(&Batch::stack(std::slice::from_ref(input))?)?;
    Ok(y.sample(0))
}
