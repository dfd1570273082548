use crate::error::{NnError, Result};

/// Mean squared error and its gradient `2(ŷ − y)/m` with respect to `ŷ`.
pub fn mse_loss(y_hat: &[f64], y: &[f64]) -> Result<(f64, Vec<f64>)> {
    if y_hat.len() != y.len() {
        return Err(NnError::Shape(format!(
            "{} predictions for {} targets",
            y_hat.len(),
            y.len()
        )));
    }
    let loss = hsreg_core::mse(y_hat, y)?;
    let m = y.len() as f64;
    let grad = y_hat.iter().zip(y).map(|(p, t)| 2.0 * (p - t) / m).collect();
    Ok((loss, grad))
}
