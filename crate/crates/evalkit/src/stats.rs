//! Standardization helpers.

use crate::error::EvalError;

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Population standard deviation (no Bessel correction).
pub fn population_sd(xs: &[f64]) -> f64 {
    let m = mean(xs);
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64).sqrt()
}

/// `z = (x - μ) / σ` with the population σ.
pub fn zscore(xs: &[f64]) -> Result<Vec<f64>, EvalError> {
    if xs.len() < 2 {
        return Err(EvalError::TooShort(xs.len()));
    }
    let m = mean(xs);
    let sd = population_sd(xs);
    // Rounding noise on a constant series must not pass as variance.
    if sd <= 1e-12 * m.abs().max(1.0) {
        return Err(EvalError::ZeroVariance);
    }
    Ok(xs.iter().map(|x| (x - m) / sd).collect())
}

/// Standard error of the mean, using the sample standard deviation.
pub fn standard_error(xs: &[f64]) -> Option<f64> {
    if xs.len() < 2 {
        return None;
    }
    let m = mean(xs);
    let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64;
    Some((var / xs.len() as f64).sqrt())
}
