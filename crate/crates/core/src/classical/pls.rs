//! PLS1 regression by NIPALS on standardized predictors and response.

use serde::{Deserialize, Serialize};

use super::linalg::{check_query, check_xy, dot, norm, solve};
use crate::error::{Error, Result};
use crate::metrics::mse;

/// Deflation stops once the residual response or covariance falls below this.
pub const COLLAPSE_NORM: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlsModel {
    pub n_components: usize,
    x_mean: Vec<f64>,
    x_scale: Vec<f64>,
    y_mean: f64,
    y_scale: f64,
    /// Weight vectors `w_a`, one per component.
    weights: Vec<Vec<f64>>,
    /// Loading vectors `p_a`.
    loadings: Vec<Vec<f64>>,
    /// Response loadings `q_a`.
    q: Vec<f64>,
    /// Regression coefficients on the standardized predictors.
    std_coefficients: Vec<f64>,
    /// Training scores `t_a`; not persisted.
    #[serde(skip)]
    scores: Vec<Vec<f64>>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

fn standardize(col: impl Iterator<Item = f64> + Clone, n: f64) -> (f64, f64) {
    let mean = col.clone().sum::<f64>() / n;
    let var = col.map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let sd = var.sqrt();
    (mean, if sd > 0.0 { sd } else { 1.0 })
}

pub fn plsr_fit(x: &[Vec<f64>], y: &[f64], n_components: usize) -> Result<PlsModel> {
    let b = check_xy(x, y)?;
    let n = x.len();
    let max = (n.saturating_sub(1)).min(b);
    if n_components < 1 || n_components > max {
        return Err(Error::Hyperparameter(format!(
            "n_components must be in 1..={max} for {n} samples and {b} bands, got {n_components}"
        )));
    }

    let nf = n as f64;
    let (x_mean, x_scale): (Vec<f64>, Vec<f64>) = (0..b).map(|j| standardize(x.iter().map(|r| r[j]), nf)).unzip();
    let (y_mean, y_scale) = standardize(y.iter().copied(), nf);

    let mut xr: Vec<Vec<f64>> = x
        .iter()
        .map(|r| (0..b).map(|j| (r[j] - x_mean[j]) / x_scale[j]).collect())
        .collect();
    let mut yr: Vec<f64> = y.iter().map(|v| (v - y_mean) / y_scale).collect();

    let mut weights = Vec::new();
    let mut loadings = Vec::new();
    let mut q = Vec::new();
    let mut scores = Vec::new();
    let mut warnings = Vec::new();

    for a in 0..n_components {
        let mut w = vec![0.0; b];
        for (row, yi) in xr.iter().zip(&yr) {
            for (wj, v) in w.iter_mut().zip(row) {
                *wj += v * yi;
            }
        }
        let wn = norm(&w);
        if norm(&yr) < COLLAPSE_NORM || wn < COLLAPSE_NORM {
            let msg = format!("PLS deflation collapsed after {a} of {n_components} components");
            log::warn!("{msg}");
            warnings.push(msg);
            break;
        }
        for wj in &mut w {
            *wj /= wn;
        }
        let t: Vec<f64> = xr.iter().map(|row| dot(row, &w)).collect();
        let tt = dot(&t, &t);
        let mut p = vec![0.0; b];
        for (row, ti) in xr.iter().zip(&t) {
            for (pj, v) in p.iter_mut().zip(row) {
                *pj += v * ti;
            }
        }
        for pj in &mut p {
            *pj /= tt;
        }
        let qa = dot(&yr, &t) / tt;
        for (row, ti) in xr.iter_mut().zip(&t) {
            for (v, pj) in row.iter_mut().zip(&p) {
                *v -= ti * pj;
            }
        }
        for (yi, ti) in yr.iter_mut().zip(&t) {
            *yi -= qa * ti;
        }
        weights.push(w);
        loadings.push(p);
        q.push(qa);
        scores.push(t);
    }

    let mut model = PlsModel {
        n_components: weights.len(),
        x_mean,
        x_scale,
        y_mean,
        y_scale,
        weights,
        loadings,
        q,
        std_coefficients: Vec::new(),
        scores,
        warnings,
    };
    model.std_coefficients = model.coefficients_for(model.n_components)?;
    Ok(model)
}

impl PlsModel {
    /// `W (PᵀW)⁻¹ q` using the first `a` components.
    fn coefficients_for(&self, a: usize) -> Result<Vec<f64>> {
        let b = self.x_mean.len();
        if a == 0 {
            return Ok(vec![0.0; b]);
        }
        let mut ptw = vec![0.0; a * a];
        for i in 0..a {
            for j in 0..a {
                ptw[i * a + j] = dot(&self.loadings[i], &self.weights[j]);
            }
        }
        let z = solve(ptw, self.q[..a].to_vec())?;
        let mut beta = vec![0.0; b];
        for (w, zk) in self.weights[..a].iter().zip(&z) {
            for (bj, wj) in beta.iter_mut().zip(w) {
                *bj += wj * zk;
            }
        }
        Ok(beta)
    }

    /// The same fit restricted to its first `a` components (capped at the
    /// number achieved). NIPALS components are nested, so this equals a
    /// fresh fit with `a` components.
    pub fn truncated(&self, a: usize) -> Result<PlsModel> {
        let a = a.min(self.n_components);
        let mut m = self.clone();
        m.n_components = a;
        m.weights.truncate(a);
        m.loadings.truncate(a);
        m.q.truncate(a);
        m.scores.truncate(a);
        m.std_coefficients = self.coefficients_for(a)?;
        Ok(m)
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        check_query(x, self.x_mean.len())?;
        let s: f64 = x
            .iter()
            .zip(&self.x_mean)
            .zip(&self.x_scale)
            .zip(&self.std_coefficients)
            .map(|(((v, m), sd), c)| (v - m) / sd * c)
            .sum();
        Ok(self.y_mean + self.y_scale * s)
    }

    /// Coefficients in original units: `y ≈ intercept + Σ coef_j x_j`.
    pub fn coefficients(&self) -> (f64, Vec<f64>) {
        let coef: Vec<f64> = self
            .std_coefficients
            .iter()
            .zip(&self.x_scale)
            .map(|(c, sd)| self.y_scale * c / sd)
            .collect();
        let intercept = self.y_mean - coef.iter().zip(&self.x_mean).map(|(c, m)| c * m).sum::<f64>();
        (intercept, coef)
    }

    /// Band indices ordered by decreasing |standardized coefficient|.
    pub fn contribution_ranking(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.std_coefficients.len()).collect();
        idx.sort_by(|&a, &b| {
            self.std_coefficients[b]
                .abs()
                .total_cmp(&self.std_coefficients[a].abs())
                .then(a.cmp(&b))
        });
        idx
    }

    pub fn std_coefficients(&self) -> &[f64] {
        &self.std_coefficients
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn loadings(&self) -> &[Vec<f64>] {
        &self.loadings
    }

    pub fn y_loadings(&self) -> &[f64] {
        &self.q
    }

    /// Training-set scores of each component (empty after deserialization).
    pub fn scores(&self) -> &[Vec<f64>] {
        &self.scores
    }
}

/// Validation MSE of every candidate component count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentSearch {
    pub selected: usize,
    pub candidates: Vec<(usize, f64)>,
}

/// Picks the component count with the lowest validation MSE; ties go to
/// fewer components. Candidates above `min(N−1, B)` are dropped.
pub fn plsr_select_components(
    x_train: &[Vec<f64>],
    y_train: &[f64],
    x_val: &[Vec<f64>],
    y_val: &[f64],
    grid: &[usize],
) -> Result<ComponentSearch> {
    let b = check_xy(x_train, y_train)?;
    check_xy(x_val, y_val)?;
    let cap = (x_train.len().saturating_sub(1)).min(b);
    let mut grid: Vec<usize> = grid.iter().copied().filter(|&a| a >= 1 && a <= cap).collect();
    grid.sort_unstable();
    grid.dedup();
    let Some(&largest) = grid.last() else {
        return Err(Error::Hyperparameter(format!("no component count in the grid is within 1..={cap}")));
    };
    let full = plsr_fit(x_train, y_train, largest)?;
    let mut best: Option<(usize, f64)> = None;
    let mut candidates = Vec::with_capacity(grid.len());
    for &a in &grid {
        let m = full.truncated(a)?;
        let pred = x_val.iter().map(|r| m.predict(r)).collect::<Result<Vec<f64>>>()?;
        let e = mse(&pred, y_val)?;
        candidates.push((a, e));
        if best.map_or(true, |(_, be)| e < be) {
            best = Some((a, e));
        }
    }
    Ok(ComponentSearch {
        selected: best.map(|(a, _)| a).unwrap_or(grid[0]),
        candidates,
    })
}
