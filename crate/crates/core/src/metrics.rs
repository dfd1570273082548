//! Regression metrics.

use crate::error::{Error, Result};

fn check_lengths(y_hat: &[f64], y: &[f64]) -> Result<()> {
    if y_hat.len() != y.len() {
        return Err(Error::Dimension(format!(
            "{} predictions for {} targets",
            y_hat.len(),
            y.len()
        )));
    }
    Ok(())
}

/// Coefficient of determination `1 - SS_res / SS_tot`.
///
/// Negative values mean the predictions are worse than the target mean.
pub fn r_squared(y_hat: &[f64], y: &[f64]) -> Result<f64> {
    check_lengths(y_hat, y)?;
    if y.len() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: y.len(),
        });
    }
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let ss_tot: f64 = y.iter().map(|v| (mean - v).powi(2)).sum();
    if ss_tot == 0.0 {
        return Err(Error::ConstantTarget);
    }
    let ss_res: f64 = y_hat.iter().zip(y).map(|(p, t)| (p - t).powi(2)).sum();
    Ok(1.0 - ss_res / ss_tot)
}

/// Mean squared error.
pub fn mse(y_hat: &[f64], y: &[f64]) -> Result<f64> {
    check_lengths(y_hat, y)?;
    if y.is_empty() {
        return Err(Error::Empty("mse of zero samples".into()));
    }
    let ss: f64 = y_hat.iter().zip(y).map(|(p, t)| (p - t).powi(2)).sum();
    Ok(ss / y.len() as f64)
}
