use serde::{Deserialize, Serialize};

use super::EvalError;

pub const MAX_RESERVE_MWH: f64 = 6000.0;
pub const AVG_RESERVE_MWH: f64 = 2000.0;

/// How often absolute forecast errors stay within the grid reserve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReserveReport {
    pub n: usize,
    pub frac_within_max: f64,
    pub frac_within_avg: f64,
    pub p5: f64,
    pub p95: f64,
    pub max_reserve: f64,
    pub avg_reserve: f64,
}

/// Percentile `q` in [0, 1] of sorted data, interpolating linearly between
/// the closest ranks: position `(n - 1) q`.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = (sorted.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub fn fraction_within(residuals: &[f64], reserve: f64) -> f64 {
    residuals.iter().filter(|r| r.abs() <= reserve).count() as f64 / residuals.len() as f64
}

pub fn reserve_analysis(residuals: &[f64], max_reserve: f64, avg_reserve: f64) -> Result<ReserveReport, EvalError> {
    if residuals.is_empty() {
        return Err(EvalError::TooFewSamples(0));
    }
    if residuals.iter().any(|r| !r.is_finite()) {
        return Err(EvalError::NonFinite);
    }
    let mut sorted = residuals.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(ReserveReport {
        n: residuals.len(),
        frac_within_max: fraction_within(residuals, max_reserve),
        frac_within_avg: fraction_within(residuals, avg_reserve),
        p5: percentile(&sorted, 0.05),
        p95: percentile(&sorted, 0.95),
        max_reserve,
        avg_reserve,
    })
}
