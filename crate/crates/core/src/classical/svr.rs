//! Epsilon-insensitive support vector regression with an RBF kernel.
//!
//! The dual is solved by SMO with second-order working-set selection over
//! the usual 2n-variable form (one α for the upper tube edge, one α* for
//! the lower). Once the KKT gap falls under the tolerance, a polishing
//! step solves the KKT equations of the identified active set exactly and
//! keeps that solution if it is feasible and at least as optimal.

use serde::{Deserialize, Serialize};

use super::linalg::{check_query, check_xy, solve, sq_dist};
use crate::error::{Error, Result};

const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvrParams {
    pub c: f64,
    pub epsilon: f64,
    /// `None` selects `1 / (B · mean per-column variance)` of the training set.
    pub gamma: Option<f64>,
    /// Stop once the maximal KKT violation is below this.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SvrParams {
    fn default() -> Self {
        Self {
            c: 1.0,
            epsilon: 0.1,
            gamma: None,
            tol: 1e-3,
            max_iter: 10_000_000,
        }
    }
}

/// `1 / (B · mean per-column variance)`, falling back to `1 / B` for flat data.
pub fn default_gamma(x: &[Vec<f64>]) -> f64 {
    let n = x.len() as f64;
    let b = x[0].len();
    let mut total = 0.0;
    for j in 0..b {
        let mean = x.iter().map(|r| r[j]).sum::<f64>() / n;
        total += x.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n;
    }
    let mean_var = total / b as f64;
    if mean_var > 0.0 {
        1.0 / (b as f64 * mean_var)
    } else {
        1.0 / b as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvrModel {
    pub c: f64,
    pub epsilon: f64,
    pub gamma: f64,
    support: Vec<Vec<f64>>,
    /// `α_i − α_i*` for each stored support vector.
    coef: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
    /// Largest KKT violation at exit.
    pub kkt_violation: f64,
    pub polished: bool,
}

impl SvrModel {
    pub fn n_support(&self) -> usize {
        self.support.len()
    }

    pub fn dual_coefficients(&self) -> &[f64] {
        &self.coef
    }

    pub fn predict(&self, q: &[f64]) -> Result<f64> {
        if let Some(s) = self.support.first() {
            check_query(q, s.len())?;
        }
        let s: f64 = self
            .support
            .iter()
            .zip(&self.coef)
            .map(|(sv, c)| c * (-self.gamma * sq_dist(sv, q)).exp())
            .sum();
        Ok(s + self.bias)
    }
}

/// Dual objective `−½βᵀKβ − ε‖β‖₁ + yᵀβ` in terms of `β = α − α*` (to be maximized).
pub fn dual_objective(kernel: &[f64], y: &[f64], beta: &[f64], epsilon: f64) -> f64 {
    let n = y.len();
    let mut quad = 0.0;
    for i in 0..n {
        for j in 0..n {
            quad += beta[i] * beta[j] * kernel[i * n + j];
        }
    }
    -0.5 * quad - epsilon * beta.iter().map(|b| b.abs()).sum::<f64>() + y.iter().zip(beta).map(|(a, b)| a * b).sum::<f64>()
}

pub fn rbf_kernel_matrix(x: &[Vec<f64>], gamma: f64) -> Vec<f64> {
    let n = x.len();
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        k[i * n + i] = 1.0;
        for j in 0..i {
            let v = (-gamma * sq_dist(&x[i], &x[j])).exp();
            k[i * n + j] = v;
            k[j * n + i] = v;
        }
    }
    k
}

struct Solver<'a> {
    n: usize,
    kernel: &'a [f64],
    c: f64,
    /// 2n variables; index t < n is α_t, t ≥ n is α*_{t−n}.
    alpha: Vec<f64>,
    grad: Vec<f64>,
}

impl Solver<'_> {
    fn sign(&self, t: usize) -> f64 {
        if t < self.n {
            1.0
        } else {
            -1.0
        }
    }

    fn q(&self, s: usize, t: usize) -> f64 {
        self.sign(s) * self.sign(t) * self.kernel[(s % self.n) * self.n + t % self.n]
    }

    fn at_upper(&self, t: usize) -> bool {
        self.alpha[t] >= self.c
    }

    fn at_lower(&self, t: usize) -> bool {
        self.alpha[t] <= 0.0
    }

    /// Returns the working pair, or `None` with the KKT gap when optimal.
    fn select(&self, tol: f64) -> (Option<(usize, usize)>, f64) {
        let l = 2 * self.n;
        let mut gmax = f64::NEG_INFINITY;
        let mut i = usize::MAX;
        for t in 0..l {
            let v = if self.sign(t) > 0.0 {
                (!self.at_upper(t)).then(|| -self.grad[t])
            } else {
                (!self.at_lower(t)).then(|| self.grad[t])
            };
            if let Some(v) = v {
                if v >= gmax {
                    gmax = v;
                    i = t;
                }
            }
        }
        let mut gmax2 = f64::NEG_INFINITY;
        let mut best = f64::INFINITY;
        let mut j = usize::MAX;
        for t in 0..l {
            let (eligible, g) = if self.sign(t) > 0.0 {
                (!self.at_lower(t), self.grad[t])
            } else {
                (!self.at_upper(t), -self.grad[t])
            };
            if !eligible {
                continue;
            }
            gmax2 = gmax2.max(g);
            if i == usize::MAX {
                continue;
            }
            let diff = gmax + g;
            if diff > 0.0 {
                let kii = self.q(i, i);
                let ktt = self.q(t, t);
                let quad = kii + ktt - 2.0 * self.sign(i) * self.sign(t) * self.q(i, t);
                let obj = -(diff * diff) / if quad > 0.0 { quad } else { TAU };
                if obj <= best {
                    best = obj;
                    j = t;
                }
            }
        }
        let gap = gmax + gmax2;
        if gap < tol || j == usize::MAX || i == usize::MAX {
            (None, gap)
        } else {
            (Some((i, j)), gap)
        }
    }

    fn update(&mut self, i: usize, j: usize) {
        let c = self.c;
        let (old_i, old_j) = (self.alpha[i], self.alpha[j]);
        let qij = self.q(i, j);
        let (qii, qjj) = (self.q(i, i), self.q(j, j));
        let (mut ai, mut aj) = (old_i, old_j);
        if self.sign(i) != self.sign(j) {
            let mut quad = qii + qjj + 2.0 * qij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-self.grad[i] - self.grad[j]) / quad;
            let diff = ai - aj;
            ai += delta;
            aj += delta;
            if diff > 0.0 {
                if aj < 0.0 {
                    aj = 0.0;
                    ai = diff;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = -diff;
            }
            if diff > 0.0 {
                if ai > c {
                    ai = c;
                    aj = c - diff;
                }
            } else if aj > c {
                aj = c;
                ai = c + diff;
            }
        } else {
            let mut quad = qii + qjj - 2.0 * qij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (self.grad[i] - self.grad[j]) / quad;
            let sum = ai + aj;
            ai -= delta;
            aj += delta;
            if sum > c {
                if ai > c {
                    ai = c;
                    aj = sum - c;
                }
            } else if aj < 0.0 {
                aj = 0.0;
                ai = sum;
            }
            if sum > c {
                if aj > c {
                    aj = c;
                    ai = sum - c;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = sum;
            }
        }
        self.alpha[i] = ai;
        self.alpha[j] = aj;
        let (di, dj) = (ai - old_i, aj - old_j);
        for t in 0..2 * self.n {
            self.grad[t] += self.q(t, i) * di + self.q(t, j) * dj;
        }
    }

    /// Bias from the KKT conditions: average over free variables, else the
    /// midpoint of the feasible interval.
    fn bias(&self) -> f64 {
        let mut ub = f64::INFINITY;
        let mut lb = f64::NEG_INFINITY;
        let mut sum_free = 0.0;
        let mut n_free = 0;
        for t in 0..2 * self.n {
            let yg = self.sign(t) * self.grad[t];
            let pos = self.sign(t) > 0.0;
            if self.at_upper(t) {
                if pos {
                    lb = lb.max(yg);
                } else {
                    ub = ub.min(yg);
                }
            } else if self.at_lower(t) {
                if pos {
                    ub = ub.min(yg);
                } else {
                    lb = lb.max(yg);
                }
            } else {
                n_free += 1;
                sum_free += yg;
            }
        }
        let rho = if n_free > 0 { sum_free / n_free as f64 } else { (ub + lb) / 2.0 };
        -rho
    }

    fn beta(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.alpha[i] - self.alpha[i + self.n]).collect()
    }
}

/// Solves the KKT system for the free coefficients with the others held
/// at their bounds. Returns `(β, b)` if the result is consistent.
fn polish(kernel: &[f64], y: &[f64], beta: &[f64], c: f64, epsilon: f64) -> Option<(Vec<f64>, f64)> {
    let n = y.len();
    let bound = c * (1.0 - 1e-12);
    let free: Vec<usize> = (0..n).filter(|&i| beta[i] != 0.0 && beta[i].abs() < bound).collect();
    if free.is_empty() {
        return None;
    }
    let fixed: Vec<usize> = (0..n).filter(|i| !free.contains(i)).collect();
    let m = free.len() + 1;
    let mut a = vec![0.0; m * m];
    let mut rhs = vec![0.0; m];
    // Rows: f(x_i) = y_i − sign(β_i)·ε for free i; last row Σβ = 0.
    for (r, &i) in free.iter().enumerate() {
        for (col, &j) in free.iter().enumerate() {
            a[r * m + col] = kernel[i * n + j];
        }
        a[r * m + m - 1] = 1.0;
        let fixed_part: f64 = fixed.iter().map(|&j| kernel[i * n + j] * beta[j]).sum();
        rhs[r] = y[i] - beta[i].signum() * epsilon - fixed_part;
    }
    for col in 0..m - 1 {
        a[(m - 1) * m + col] = 1.0;
    }
    rhs[m - 1] = -fixed.iter().map(|&j| beta[j]).sum::<f64>();
    let sol = solve(a, rhs).ok()?;
    let mut out = beta.to_vec();
    for (r, &i) in free.iter().enumerate() {
        let v = sol[r];
        if v.signum() != beta[i].signum() || v.abs() > c {
            return None;
        }
        out[i] = v;
    }
    let b = sol[m - 1];
    // Bound and zero coefficients must still satisfy their KKT conditions.
    let slack = 1e-9 * (1.0 + epsilon);
    for &j in &fixed {
        let f: f64 = (0..n).map(|k| kernel[j * n + k] * out[k]).sum::<f64>() + b;
        let r = y[j] - f;
        let ok = if out[j] == 0.0 {
            r.abs() <= epsilon + slack
        } else if out[j] > 0.0 {
            r >= epsilon - slack
        } else {
            r <= -epsilon + slack
        };
        if !ok {
            return None;
        }
    }
    Some((out, b))
}

pub fn svr_fit(x: &[Vec<f64>], y: &[f64], params: &SvrParams) -> Result<SvrModel> {
    check_xy(x, y)?;
    if x.len() < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: x.len() });
    }
    let gamma = params.gamma.unwrap_or_else(|| default_gamma(x));
    for (name, v) in [("C", params.c), ("epsilon", params.epsilon), ("gamma", gamma), ("tol", params.tol)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::Hyperparameter(format!("{name} must be positive, got {v}")));
        }
    }
    let n = x.len();
    let kernel = rbf_kernel_matrix(x, gamma);
    let mut grad = Vec::with_capacity(2 * n);
    grad.extend(y.iter().map(|v| params.epsilon - v));
    grad.extend(y.iter().map(|v| params.epsilon + v));
    let mut solver = Solver {
        n,
        kernel: &kernel,
        c: params.c,
        alpha: vec![0.0; 2 * n],
        grad,
    };

    let mut iterations = 0;
    let violation = loop {
        let (pair, gap) = solver.select(params.tol);
        let Some((i, j)) = pair else { break gap };
        if iterations >= params.max_iter {
            return Err(Error::Convergence {
                iterations,
                violation: gap,
            });
        }
        solver.update(i, j);
        iterations += 1;
    };

    let mut beta = solver.beta();
    let mut bias = solver.bias();
    let mut polished = false;
    if let Some((pb, pbias)) = polish(&kernel, y, &beta, params.c, params.epsilon) {
        if dual_objective(&kernel, y, &pb, params.epsilon) >= dual_objective(&kernel, y, &beta, params.epsilon) - 1e-12 {
            beta = pb;
            bias = pbias;
            polished = true;
        }
    }

    let (support, coef): (Vec<Vec<f64>>, Vec<f64>) = x
        .iter()
        .zip(&beta)
        .filter(|(_, &b)| b != 0.0)
        .map(|(r, &b)| (r.clone(), b))
        .unzip();
    Ok(SvrModel {
        c: params.c,
        epsilon: params.epsilon,
        gamma,
        support,
        coef,
        bias,
        iterations,
        kkt_violation: violation.max(0.0),
        polished,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> SvrParams {
        SvrParams {
            gamma: Some(0.5),
            ..SvrParams::default()
        }
    }

    #[test]
    fn constant_targets_give_constant_predictor() {
        let x = vec![vec![0.0], vec![1.0], vec![2.0], vec![4.0]];
        let m = svr_fit(&x, &[3.0; 4], &params()).unwrap();
        assert_eq!(m.n_support(), 0);
        for q in [-3.0, 0.5, 10.0] {
            assert!((m.predict(&[q]).unwrap() - 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn tube_absorbs_small_spread() {
        let x = vec![vec![0.0], vec![1.0], vec![2.0]];
        let m = svr_fit(&x, &[1.0, 1.05, 0.97], &params()).unwrap();
        assert_eq!(m.n_support(), 0);
        let p = m.predict(&[7.0]).unwrap();
        assert!((m.predict(&[0.3]).unwrap() - p).abs() < 1e-15);
    }

    #[test]
    fn fits_a_smooth_curve() {
        let x: Vec<Vec<f64>> = (0..30).map(|i| vec![i as f64 / 10.0]).collect();
        let y: Vec<f64> = x.iter().map(|r| r[0].sin()).collect();
        let m = svr_fit(
            &x,
            &y,
            &SvrParams {
                c: 10.0,
                epsilon: 0.01,
                gamma: Some(1.0),
                ..SvrParams::default()
            },
        )
        .unwrap();
        for (r, t) in x.iter().zip(&y) {
            assert!((m.predict(r).unwrap() - t).abs() < 0.02);
        }
        let s: f64 = m.dual_coefficients().iter().sum();
        assert!(s.abs() < 1e-9);
    }

    #[test]
    fn iteration_cap_reports_violation() {
        let x: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let y: Vec<f64> = (0..10).map(|i| (i * i) as f64).collect();
        let p = SvrParams {
            max_iter: 1,
            ..params()
        };
        assert!(matches!(svr_fit(&x, &y, &p), Err(Error::Convergence { iterations: 1, .. })));
    }
}
