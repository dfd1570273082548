//! Single-sample tensors and channel-major mini-batches.

use serde::{Deserialize, Serialize};

use crate::error::{NnError, Result};

/// One sample: `channels × length` values, channel-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor1d {
    channels: usize,
    length: usize,
    values: Vec<f64>,
}

impl Tensor1d {
    pub fn new(channels: usize, length: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != channels * length {
            return Err(NnError::Shape(format!(
                "{} values for a {channels}×{length} tensor",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(NnError::Shape(format!("non-finite value at index {i}")));
        }
        Ok(Self { channels, length, values })
    }

    /// A single-channel tensor, e.g. one spectrum.
    pub fn from_signal(values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        Self::new(1, n, values)
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        &self.values[c * self.length..(c + 1) * self.length]
    }
}

/// A mini-batch laid out as `[channel][sample][position]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub channels: usize,
    pub batch: usize,
    pub length: usize,
    pub data: Vec<f64>,
}

impl Batch {
    pub fn zeros(channels: usize, batch: usize, length: usize) -> Self {
        Self {
            channels,
            batch,
            length,
            data: vec![0.0; channels * batch * length],
        }
    }

    pub fn new(channels: usize, batch: usize, length: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != channels * batch * length {
            return Err(NnError::Shape(format!(
                "{} values for a batch of {batch} × {channels}×{length}",
                data.len()
            )));
        }
        Ok(Self { channels, batch, length, data })
    }

    /// Stacks equally shaped samples.
    pub fn stack(samples: &[Tensor1d]) -> Result<Self> {
        let Some(first) = samples.first() else {
            return Err(NnError::Shape("cannot stack an empty batch".into()));
        };
        let (c, l, n) = (first.channels, first.length, samples.len());
        let mut out = Self::zeros(c, n, l);
        for (s, t) in samples.iter().enumerate() {
            if t.channels != c || t.length != l {
                return Err(NnError::Shape(format!(
                    "sample {s} is {}×{}, expected {c}×{l}",
                    t.channels, t.length
                )));
            }
            for ch in 0..c {
                out.row_mut(ch, s).copy_from_slice(t.channel(ch));
            }
        }
        Ok(out)
    }

    /// Single-channel batch from rows of equal length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let Some(first) = rows.first() else {
            return Err(NnError::Shape("cannot stack an empty batch".into()));
        };
        let l = first.len();
        let mut data = Vec::with_capacity(rows.len() * l);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != l {
                return Err(NnError::Shape(format!("row {i} has {} values, expected {l}", r.len())));
            }
            data.extend_from_slice(r);
        }
        Self::new(1, rows.len(), l, data)
    }

    pub fn sample(&self, s: usize) -> Tensor1d {
        let mut values = Vec::with_capacity(self.channels * self.length);
        for c in 0..self.channels {
            values.extend_from_slice(self.row(c, s));
        }
        Tensor1d {
            channels: self.channels,
            length: self.length,
            values,
        }
    }

    pub fn row(&self, c: usize, s: usize) -> &[f64] {
        let start = (c * self.batch + s) * self.length;
        &self.data[start..start + self.length]
    }

    pub fn row_mut(&mut self, c: usize, s: usize) -> &mut [f64] {
        let start = (c * self.batch + s) * self.length;
        &mut self.data[start..start + self.length]
    }

    /// All values of one channel across the batch.
    pub fn channel(&self, c: usize) -> &[f64] {
        let w = self.batch * self.length;
        &self.data[c * w..(c + 1) * w]
    }

    pub fn channel_mut(&mut self, c: usize) -> &mut [f64] {
        let w = self.batch * self.length;
        &mut self.data[c * w..(c + 1) * w]
    }

    pub fn same_shape(&self, other: &Batch) -> bool {
        self.channels == other.channels && self.batch == other.batch && self.length == other.length
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.channels, self.batch, self.length)
    }
}
