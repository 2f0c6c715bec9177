use serde::{Deserialize, Serialize};

use super::EvalError;

/// Point-forecast accuracy in the units of the inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub n: usize,
    pub mae: f64,
    pub mse: f64,
    pub rmse: f64,
    /// `None` when the actuals have zero variance.
    pub r_squared: Option<f64>,
    /// `None` without a baseline or when the baseline is error-free.
    pub mase: Option<f64>,
    /// Wall-clock seconds; never used in correctness checks.
    pub fit_time: f64,
    pub score_time: f64,
}

/// MAE, MSE, RMSE, R² and (given naive forecasts) MASE.
pub fn compute_metrics(actual: &[f64], predicted: &[f64], naive: Option<&[f64]>) -> Result<MetricReport, EvalError> {
    if actual.len() != predicted.len() {
        return Err(EvalError::LengthMismatch { actual: actual.len(), predicted: predicted.len() });
    }
    if actual.len() < 2 {
        return Err(EvalError::TooFewSamples(actual.len()));
    }
    if actual.iter().chain(predicted).any(|v| !v.is_finite()) {
        return Err(EvalError::NonFinite);
    }
    let n = actual.len() as f64;
    let mae = actual.iter().zip(predicted).map(|(a, p)| (a - p).abs()).sum::<f64>() / n;
    let ss_res: f64 = actual.iter().zip(predicted).map(|(a, p)| (a - p).powi(2)).sum();
    let mse = ss_res / n;
    let mean = actual.iter().sum::<f64>() / n;
    let ss_tot: f64 = actual.iter().map(|a| (a - mean).powi(2)).sum();
    let r_squared = (ss_tot > 0.0).then(|| 1.0 - ss_res / ss_tot);
    let mase = match naive {
        None => None,
        Some(b) => {
            if b.len() != actual.len() {
                return Err(EvalError::LengthMismatch { actual: actual.len(), predicted: b.len() });
            }
            let naive_mae = actual.iter().zip(b).map(|(a, p)| (a - p).abs()).sum::<f64>() / n;
            (naive_mae > 0.0 && naive_mae.is_finite()).then(|| mae / naive_mae)
        }
    };
    Ok(MetricReport { n: actual.len(), mae, mse, rmse: mse.sqrt(), r_squared, mase, fit_time: 0.0, score_time: 0.0 })
}

/// Persistence forecasts: each value predicted by its predecessor, the
/// first by `previous`.
pub fn persistence_baseline(actual: &[f64], previous: f64) -> Vec<f64> {
    std::iter::once(previous).chain(actual.iter().copied()).take(actual.len()).collect()
}
