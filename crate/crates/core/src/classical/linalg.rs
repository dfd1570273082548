//! Small dense helpers; the matrices here are at most a few hundred wide.

use crate::error::{Error, Result};

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Solves `a · x = b` for square row-major `a` (n×n) by Gaussian
/// elimination with partial pivoting.
pub fn solve(mut a: Vec<f64>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = b.len();
    assert_eq!(a.len(), n * n, "matrix must be n×n");
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs()))
            .unwrap();
        if a[pivot * n + col].abs() < 1e-300 {
            return Err(Error::Degenerate(format!("singular system at column {col}")));
        }
        if pivot != col {
            for k in 0..n {
                a.swap(pivot * n + k, col * n + k);
            }
            b.swap(pivot, col);
        }
        let d = a[col * n + col];
        for row in col + 1..n {
            let f = a[row * n + col] / d;
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                a[row * n + k] -= f * a[col * n + k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row * n + k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row * n + row];
    }
    Ok(x)
}

/// Checks that `x` is a non-empty rectangular matrix matching `y`.
pub fn check_xy(x: &[Vec<f64>], y: &[f64]) -> Result<usize> {
    if x.is_empty() {
        return Err(Error::Empty("no training rows".into()));
    }
    if x.len() != y.len() {
        return Err(Error::Dimension(format!("{} rows but {} targets", x.len(), y.len())));
    }
    let width = x[0].len();
    if width == 0 {
        return Err(Error::Empty("training rows have no features".into()));
    }
    if let Some(i) = x.iter().position(|r| r.len() != width) {
        return Err(Error::Dimension(format!("row {i} has {} features, expected {width}", x[i].len())));
    }
    if x.iter().flatten().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::InvalidSpectrum("training data contains non-finite values".into()));
    }
    Ok(width)
}

pub fn check_query(x: &[f64], width: usize) -> Result<()> {
    if x.len() != width {
        return Err(Error::Dimension(format!("query has {} features, model expects {width}", x.len())));
    }
    Ok(())
}
