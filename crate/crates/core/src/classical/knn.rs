//! k-nearest-neighbour regression.

use serde::{Deserialize, Serialize};

use super::linalg::{check_query, check_xy, sq_dist};
use crate::error::{Error, Result};

/// Stored training set; prediction averages the `k` nearest targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub k: usize,
    x: Vec<Vec<f64>>,
    y: Vec<f64>,
}

pub fn knnr_fit(x: &[Vec<f64>], y: &[f64], k: usize) -> Result<KnnModel> {
    check_xy(x, y)?;
    if k == 0 {
        return Err(Error::Hyperparameter("k must be at least 1".into()));
    }
    if x.len() < k {
        return Err(Error::TooFewSamples { needed: k, got: x.len() });
    }
    Ok(KnnModel {
        k,
        x: x.to_vec(),
        y: y.to_vec(),
    })
}

impl KnnModel {
    pub fn n_features(&self) -> usize {
        self.x[0].len()
    }

    /// Indices of the `k` nearest training rows, nearest first; equal
    /// distances go to the lower index.
    pub fn neighbors(&self, q: &[f64]) -> Result<Vec<usize>> {
        check_query(q, self.n_features())?;
        let mut d: Vec<(f64, usize)> = self.x.iter().enumerate().map(|(i, r)| (sq_dist(r, q).sqrt(), i)).collect();
        d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        Ok(d.into_iter().take(self.k).map(|(_, i)| i).collect())
    }

    pub fn predict(&self, q: &[f64]) -> Result<f64> {
        let idx = self.neighbors(q)?;
        Ok(idx.iter().map(|&i| self.y[i]).sum::<f64>() / self.k as f64)
    }
}
