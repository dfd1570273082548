//! Weighted regression trees, the AdaBoost base learner.

use serde::{Deserialize, Serialize};

use super::linalg::{check_query, check_xy};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Node {
    Leaf {
        value: f64,
    },
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub n_features: usize,
    /// Node 0 is the root.
    pub nodes: Vec<Node>,
}

impl RegressionTree {
    pub fn predict(&self, q: &[f64]) -> Result<f64> {
        check_query(q, self.n_features)?;
        Ok(self.predict_unchecked(q))
    }

    pub(crate) fn predict_unchecked(&self, q: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf { value } => return value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if q[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }

    /// The root split, if the tree has one.
    pub fn root_split(&self) -> Option<(usize, f64)> {
        match self.nodes[0] {
            Node::Split { feature, threshold, .. } => Some((feature, threshold)),
            Node::Leaf { .. } => None,
        }
    }
}

/// Per-feature row orderings, computed once and reused across boosting rounds.
#[derive(Debug, Clone)]
pub struct SortedFeatures {
    order: Vec<Vec<usize>>,
}

impl SortedFeatures {
    pub fn new(x: &[Vec<f64>]) -> Self {
        let n_features = x.first().map_or(0, Vec::len);
        let order = (0..n_features)
            .map(|f| {
                let mut idx: Vec<usize> = (0..x.len()).collect();
                idx.sort_by(|&a, &b| x[a][f].total_cmp(&x[b][f]).then(a.cmp(&b)));
                idx
            })
            .collect();
        Self { order }
    }
}

struct Builder<'a> {
    x: &'a [Vec<f64>],
    y: &'a [f64],
    w: &'a [f64],
    max_depth: usize,
    nodes: Vec<Node>,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    sse: f64,
}

impl Builder<'_> {
    fn weighted_mean(&self, rows: &[usize]) -> (f64, f64) {
        let sw: f64 = rows.iter().map(|&i| self.w[i]).sum();
        let swy: f64 = rows.iter().map(|&i| self.w[i] * self.y[i]).sum();
        (sw, swy / sw)
    }

    fn best_split(&self, order: &[Vec<usize>], center: f64) -> Option<BestSplit> {
        let mut best: Option<BestSplit> = None;
        for (feature, rows) in order.iter().enumerate() {
            // Totals over the node, with targets centered for stability.
            let (mut tw, mut twy, mut twyy) = (0.0, 0.0, 0.0);
            for &i in rows {
                let d = self.y[i] - center;
                tw += self.w[i];
                twy += self.w[i] * d;
                twyy += self.w[i] * d * d;
            }
            let (mut lw, mut lwy, mut lwyy) = (0.0, 0.0, 0.0);
            for k in 0..rows.len() - 1 {
                let i = rows[k];
                let d = self.y[i] - center;
                lw += self.w[i];
                lwy += self.w[i] * d;
                lwyy += self.w[i] * d * d;
                let a = self.x[i][feature];
                let b = self.x[rows[k + 1]][feature];
                if a == b {
                    continue;
                }
                let rw = tw - lw;
                if lw <= 0.0 || rw <= 0.0 {
                    continue;
                }
                let rwy = twy - lwy;
                let rwyy = twyy - lwyy;
                let sse = (lwyy - lwy * lwy / lw) + (rwyy - rwy * rwy / rw);
                if best.as_ref().map_or(true, |s| sse < s.sse) {
                    let mut threshold = a + (b - a) / 2.0;
                    if threshold >= b {
                        threshold = a;
                    }
                    best = Some(BestSplit { feature, threshold, sse });
                }
            }
        }
        best
    }

    fn grow(&mut self, order: Vec<Vec<usize>>, depth: usize) -> usize {
        let rows = &order[0];
        let (_, mean) = self.weighted_mean(rows);
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf { value: mean });
        if depth >= self.max_depth || rows.len() < 2 {
            return id;
        }
        let parent_sse: f64 = rows.iter().map(|&i| self.w[i] * (self.y[i] - mean).powi(2)).sum();
        if parent_sse <= 0.0 {
            return id;
        }
        let Some(split) = self.best_split(&order, mean) else {
            return id;
        };
        if split.sse >= parent_sse * (1.0 - 1e-12) {
            return id;
        }
        let goes_left = |i: usize| self.x[i][split.feature] <= split.threshold;
        let (left_order, right_order): (Vec<Vec<usize>>, Vec<Vec<usize>>) = order
            .iter()
            .map(|rows| rows.iter().partition(|&&i| goes_left(i)))
            .unzip();
        let left = self.grow(left_order, depth + 1);
        let right = self.grow(right_order, depth + 1);
        self.nodes[id] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        id
    }
}

/// Fits a tree whose splits minimize the weighted within-child sum of
/// squares (maximal weighted variance reduction); leaves hold weighted means.
pub fn tree_fit(x: &[Vec<f64>], y: &[f64], weights: &[f64], max_depth: usize) -> Result<RegressionTree> {
    tree_fit_sorted(x, y, weights, max_depth, &SortedFeatures::new(x))
}

pub fn tree_fit_sorted(
    x: &[Vec<f64>],
    y: &[f64],
    weights: &[f64],
    max_depth: usize,
    sorted: &SortedFeatures,
) -> Result<RegressionTree> {
    let n_features = check_xy(x, y)?;
    if weights.len() != y.len() {
        return Err(Error::Dimension(format!("{} weights for {} rows", weights.len(), y.len())));
    }
    if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
        return Err(Error::Hyperparameter("sample weights must be finite and nonnegative".into()));
    }
    if weights.iter().sum::<f64>() <= 0.0 {
        return Err(Error::Degenerate("sample weights sum to zero".into()));
    }
    // Zero-weight rows carry no information; leaving them out keeps every
    // node's weight positive.
    let order: Vec<Vec<usize>> = sorted
        .order
        .iter()
        .map(|rows| rows.iter().copied().filter(|&i| weights[i] > 0.0).collect())
        .collect();
    let mut b = Builder {
        x,
        y,
        w: weights,
        max_depth,
        nodes: Vec::new(),
    };
    b.grow(order, 0);
    Ok(RegressionTree {
        n_features,
        nodes: b.nodes,
    })
}
