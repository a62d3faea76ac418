//! Score standardization and mixing.

use super::RankError;
use crate::stats::{midranks, normal_quantile};

/// Van der Waerden normal scores: `Φ⁻¹(r / (n + 1))` with midranks for
/// ties. `+inf` entries tie with each other above every finite value.
pub fn van_der_waerden(values: &[f64]) -> Result<Vec<f64>, RankError> {
    if values.is_empty() {
        return Err(RankError::EmptyInput);
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(RankError::NonFinite("NaN in rank transform input".into()));
    }
    let denom = (values.len() + 1) as f64;
    Ok(midranks(values)
        .into_iter()
        .map(|r| normal_quantile(r / denom))
        .collect())
}

/// Standard scores with population standard deviation. A constant column
/// maps to all zeros.
pub fn zscore(values: &[f64]) -> Result<Vec<f64>, RankError> {
    if values.is_empty() {
        return Err(RankError::EmptyInput);
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(RankError::NonFinite("non-finite value in z-score input".into()));
    }
    let first = values[0];
    if values.iter().all(|&v| v == first) {
        return Ok(vec![0.0; values.len()]);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let sd = var.sqrt();
    Ok(values.iter().map(|v| (v - mean) / sd).collect())
}

/// `beta * s1_hat + (1 - |beta|) * s2_hat`.
pub fn mix(s1_hat: f64, s2_hat: f64, beta: f64) -> Result<f64, RankError> {
    check_beta(beta)?;
    Ok(beta * s1_hat + (1.0 - beta.abs()) * s2_hat)
}

pub(crate) fn check_beta(beta: f64) -> Result<(), RankError> {
    if beta.is_finite() && beta.abs() <= 1.0 {
        Ok(())
    } else {
        Err(RankError::BetaOutOfRange(beta))
    }
}
