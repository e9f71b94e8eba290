//! Small numeric utilities: the scaling-study line fit and summary moments.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FitError {
    #[error("a slope fit needs at least 3 points (got {0})")]
    TooFewPoints(usize),
    #[error("fit inputs must be positive and finite")]
    BadInput,
}

/// Ordinary least-squares line through `(x, y)` pairs.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// `y_k - (slope * x_k + intercept)` per point.
    pub residuals: Vec<f64>,
}

/// Fits `log(epochs)` against `log(1 / eps_hat)`.
///
/// Points are `(eps_hat, epochs)`; an exact power law
/// `epochs = c * eps_hat^(-s)` comes back with slope `s` to rounding.
pub fn fit_log_log(points: &[(f64, f64)]) -> Result<LineFit, FitError> {
    if points.len() < 3 {
        return Err(FitError::TooFewPoints(points.len()));
    }
    if points
        .iter()
        .any(|(e, t)| !(e.is_finite() && t.is_finite() && *e > 0.0 && *t > 0.0))
    {
        return Err(FitError::BadInput);
    }
    let xy: Vec<(f64, f64)> = points
        .iter()
        .map(|(e, t)| ((1.0 / e).ln(), t.ln()))
        .collect();
    let k = xy.len() as f64;
    let mx = xy.iter().map(|(x, _)| x).sum::<f64>() / k;
    let my = xy.iter().map(|(_, y)| y).sum::<f64>() / k;
    let sxx: f64 = xy.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xy.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(FitError::BadInput);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residuals = xy
        .iter()
        .map(|(x, y)| y - (slope * x + intercept))
        .collect();
    Ok(LineFit {
        slope,
        intercept,
        residuals,
    })
}

/// Mean and sample standard deviation (zero for a single value).
pub fn mean_and_sd(values: &[f64]) -> (f64, f64) {
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (k - 1.0);
    (mean, var.sqrt())
}
