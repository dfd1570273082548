//! AdaBoost.R2 (Drucker, 1997) with linear loss over weighted regression trees.
//!
//! Trees are fit on the weighted sample directly rather than on a weighted
//! bootstrap, so fitting is deterministic.

use serde::{Deserialize, Serialize};

use super::linalg::{check_query, check_xy};
use super::tree::{tree_fit_sorted, RegressionTree, SortedFeatures};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaBoostParams {
    pub n_estimators: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
}

impl Default for AdaBoostParams {
    fn default() -> Self {
        Self {
            n_estimators: 60,
            learning_rate: 0.8,
            max_depth: 3,
        }
    }
}

/// What happened in one boosting round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostRound {
    /// Sample distribution the round's tree was fit on.
    pub sample_weights: Vec<f64>,
    /// Weighted average linear loss L̄.
    pub avg_loss: f64,
    /// `L̄ / (1 − L̄)`; `None` when the round ended boosting.
    pub beta: Option<f64>,
    /// Weight of the round's tree in the median, if it was kept.
    pub estimator_weight: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaBoostModel {
    pub params: AdaBoostParams,
    estimators: Vec<RegressionTree>,
    estimator_weights: Vec<f64>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl AdaBoostModel {
    pub fn estimators(&self) -> &[RegressionTree] {
        &self.estimators
    }

    pub fn estimator_weights(&self) -> &[f64] {
        &self.estimator_weights
    }

    /// Weighted median of the trees' predictions.
    pub fn predict(&self, q: &[f64]) -> Result<f64> {
        check_query(q, self.estimators[0].n_features)?;
        let mut preds: Vec<(f64, f64)> = self
            .estimators
            .iter()
            .zip(&self.estimator_weights)
            .map(|(t, &w)| (t.predict_unchecked(q), w))
            .collect();
        Ok(weighted_median(&mut preds))
    }
}

/// Smallest value whose cumulative weight reaches half the total.
pub fn weighted_median(values: &mut [(f64, f64)]) -> f64 {
    values.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = values.iter().map(|v| v.1).sum();
    let mut acc = 0.0;
    for &(v, w) in values.iter() {
        acc += w;
        if acc >= 0.5 * total {
            return v;
        }
    }
    values[values.len() - 1].0
}

pub fn adaboost_r2_fit(x: &[Vec<f64>], y: &[f64], params: &AdaBoostParams) -> Result<(AdaBoostModel, Vec<BoostRound>)> {
    check_xy(x, y)?;
    let n = x.len();
    if n < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: n });
    }
    if params.n_estimators == 0 || params.max_depth == 0 {
        return Err(Error::Hyperparameter("n_estimators and max_depth must be positive".into()));
    }
    if !(params.learning_rate > 0.0 && params.learning_rate.is_finite()) {
        return Err(Error::Hyperparameter(format!(
            "learning rate must be positive, got {}",
            params.learning_rate
        )));
    }
    let lr = params.learning_rate;
    let sorted = SortedFeatures::new(x);
    let mut w = vec![1.0 / n as f64; n];
    let mut estimators = Vec::new();
    let mut weights = Vec::new();
    let mut rounds = Vec::new();
    let mut warnings = Vec::new();

    for round in 0..params.n_estimators {
        let tree = tree_fit_sorted(x, y, &w, params.max_depth, &sorted)?;
        let err: Vec<f64> = x.iter().zip(y).map(|(r, t)| (tree.predict_unchecked(r) - t).abs()).collect();
        let max_err = err.iter().copied().fold(0.0, f64::max);
        let loss: Vec<f64> = if max_err > 0.0 {
            err.iter().map(|e| e / max_err).collect()
        } else {
            vec![0.0; n]
        };
        let avg: f64 = loss.iter().zip(&w).map(|(l, wi)| l * wi).sum();

        if avg <= 0.0 || avg >= 0.5 {
            let keep = round == 0 || avg <= 0.0;
            if round == 0 {
                warnings.push(format!(
                    "first boosting round has average loss {avg}; using a single tree"
                ));
            }
            rounds.push(BoostRound {
                sample_weights: w.clone(),
                avg_loss: avg,
                beta: None,
                estimator_weight: keep.then_some(1.0),
            });
            if keep {
                estimators.push(tree);
                weights.push(1.0);
            }
            break;
        }

        let beta = avg / (1.0 - avg);
        let est_w = lr * (1.0 / beta).ln();
        rounds.push(BoostRound {
            sample_weights: w.clone(),
            avg_loss: avg,
            beta: Some(beta),
            estimator_weight: Some(est_w),
        });
        estimators.push(tree);
        weights.push(est_w);

        for (wi, l) in w.iter_mut().zip(&loss) {
            *wi *= beta.powf(lr * (1.0 - l));
        }
        let total: f64 = w.iter().sum();
        for wi in &mut w {
            *wi /= total;
        }
    }
    for msg in &warnings {
        log::warn!("{msg}");
    }
    Ok((
        AdaBoostModel {
            params: *params,
            estimators,
            estimator_weights: weights,
            warnings,
        },
        rounds,
    ))
}
