use serde::{Deserialize, Serialize};

use super::MarketError;

/// `Σ R_t (1+i)^-t` for `t = 0..N`.
pub fn npv(cashflows: &[f64], rate: f64) -> Result<f64, MarketError> {
    if !(rate > -1.0) {
        return Err(MarketError::InvalidParameter(format!("discount rate must exceed -1, got {rate}")));
    }
    let base = 1.0 + rate;
    Ok(cashflows.iter().enumerate().map(|(t, r)| r * base.powi(-(t as i32))).sum())
}

/// Least-squares line through (year, price) observations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CarbonTrend {
    pub mean_year: f64,
    pub mean_price: f64,
    pub slope: f64,
}

impl CarbonTrend {
    pub fn fit(history: &[(i32, f64)]) -> Result<Self, MarketError> {
        if history.len() < 2 {
            return Err(MarketError::DegenerateHistory);
        }
        let n = history.len() as f64;
        let mean_year = history.iter().map(|&(y, _)| f64::from(y)).sum::<f64>() / n;
        let mean_price = history.iter().map(|&(_, p)| p).sum::<f64>() / n;
        let sxx: f64 = history.iter().map(|&(y, _)| (f64::from(y) - mean_year).powi(2)).sum();
        if sxx == 0.0 {
            return Err(MarketError::DegenerateHistory);
        }
        let sxy: f64 = history.iter().map(|&(y, p)| (f64::from(y) - mean_year) * (p - mean_price)).sum();
        Ok(Self { mean_year, mean_price, slope: sxy / sxx })
    }

    /// Extrapolated price, floored at zero.
    pub fn price_at(&self, year: i32) -> f64 {
        (self.mean_price + self.slope * (f64::from(year) - self.mean_year)).max(0.0)
    }
}

/// Prices for the `horizon` years after the last observation.
pub fn forecast_carbon_price(history: &[(i32, f64)], horizon: u32) -> Result<Vec<(i32, f64)>, MarketError> {
    let trend = CarbonTrend::fit(history)?;
    let last = history.iter().map(|&(y, _)| y).max().expect("fit checked length");
    Ok((1..=horizon as i32).map(|k| (last + k, trend.price_at(last + k))).collect())
}
