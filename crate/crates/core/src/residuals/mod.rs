//! Fitting closed-form distributions to forecast residuals, choosing among
//! them by histogram SSE, and sampling from the winner.

mod family;
mod fit;
mod simplex;
mod sse;

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use family::Family;
pub use sse::{freedman_diaconis_bins, BinRule, Histogram, MAX_BINS, MIN_BINS};

use crate::rng::{seeded, StreamRng};

/// Fewest residuals accepted by a fit.
pub const MIN_SAMPLES: usize = 50;

#[derive(Debug, Error)]
pub enum ResidualError {
    #[error("need at least {MIN_SAMPLES} residuals, got {0}")]
    TooFewSamples(usize),
    #[error("residuals have zero variance")]
    DegenerateSample,
    #[error("residuals contain non-finite values")]
    NonFinite,
    #[error("unsupported distribution family `{0}`")]
    UnsupportedFamily(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("{family}: no feasible fit")]
    FitFailed { family: Family },
    #[error("every family failed to fit")]
    AllFitsFailed(Vec<(Family, String)>),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("malformed distribution document: {0}")]
    Json(#[from] serde_json::Error),
}

/// A fitted (or specified) residual distribution in MWh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualDistribution {
    pub family: Family,
    /// In [`Family::param_names`] order.
    pub params: Vec<f64>,
    /// Histogram SSE on the fitted sample; `None` when not fitted.
    pub sse: Option<f64>,
    pub n_samples: usize,
    pub bin_rule: BinRule,
    pub n_bins: usize,
    pub log_likelihood: Option<f64>,
    /// False when the optimiser ran out of budget; parameters are then the
    /// best found.
    pub converged: bool,
}

impl ResidualDistribution {
    /// A distribution with given parameters, not fitted to data.
    pub fn new(family: Family, params: Vec<f64>) -> Result<Self, ResidualError> {
        family.check_params(&params)?;
        Ok(Self {
            family,
            params,
            sse: None,
            n_samples: 0,
            bin_rule: BinRule::default(),
            n_bins: 0,
            log_likelihood: None,
            converged: true,
        })
    }

    pub fn normal(mu: f64, sigma: f64) -> Result<Self, ResidualError> {
        Self::new(Family::Normal, vec![mu, sigma])
    }

    pub fn n_params(&self) -> usize {
        self.family.n_params()
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        family::ln_pdf(self.family, &self.params, x)
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.ln_pdf(x).exp()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        family::cdf(self.family, &self.params, x)
    }

    /// Closed-form quantile, for families that have one.
    pub fn quantile(&self, u: f64) -> Option<f64> {
        (u > 0.0 && u < 1.0).then(|| family::quantile(self.family, &self.params, u)).flatten()
    }

    pub fn support(&self) -> (f64, f64) {
        family::support(self.family, &self.params)
    }

    pub fn mean(&self) -> Option<f64> {
        family::mean(self.family, &self.params)
    }

    pub fn variance(&self) -> Option<f64> {
        family::variance(self.family, &self.params)
    }

    /// `n` seeded draws in MWh.
    pub fn sample(&self, seed: u64, n: usize) -> Vec<f64> {
        let mut rng = seeded(seed);
        (0..n).map(|_| self.draw(&mut rng)).collect()
    }

    /// One draw from a caller-owned stream.
    pub fn draw(&self, rng: &mut StreamRng) -> f64 {
        family::draw(self.family, &self.params, rng)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("distributions always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, ResidualError> {
        let d: Self = serde_json::from_str(text)?;
        d.family.check_params(&d.params)?;
        Ok(d)
    }

    pub fn save(&self, path: &Path) -> Result<(), ResidualError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, ResidualError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

fn check_sample(residuals: &[f64]) -> Result<(), ResidualError> {
    if residuals.len() < MIN_SAMPLES {
        return Err(ResidualError::TooFewSamples(residuals.len()));
    }
    if residuals.iter().any(|r| !r.is_finite()) {
        return Err(ResidualError::NonFinite);
    }
    if residuals.iter().all(|&r| r == residuals[0]) {
        return Err(ResidualError::DegenerateSample);
    }
    Ok(())
}

/// Histogram SSE of `dist` against `residuals` with `n_bins` equal bins
/// over the residual range.
pub fn score_sse(dist: &ResidualDistribution, residuals: &[f64], n_bins: usize) -> Result<f64, ResidualError> {
    if n_bins < MIN_BINS {
        return Err(ResidualError::InvalidParameter(format!("n_bins must be >= {MIN_BINS}")));
    }
    check_sample(residuals)?;
    Ok(Histogram::new(residuals, n_bins).sse(|x| dist.pdf(x)))
}

fn fit_scored(
    residuals: &[f64],
    family: Family,
    stats: &fit::SampleStats,
    rule: BinRule,
    hist: &Histogram,
) -> Result<ResidualDistribution, ResidualError> {
    let out = fit::fit_params(family, residuals, stats).ok_or(ResidualError::FitFailed { family })?;
    family.check_params(&out.params).map_err(|_| ResidualError::FitFailed { family })?;
    let mut d = ResidualDistribution::new(family, out.params)?;
    d.sse = Some(hist.sse(|x| d.pdf(x)));
    d.n_samples = residuals.len();
    d.bin_rule = rule;
    d.n_bins = hist.density.len();
    d.log_likelihood = Some(out.log_likelihood);
    d.converged = out.converged;
    Ok(d)
}

fn prepare(residuals: &[f64], rule: BinRule) -> Result<(fit::SampleStats, Histogram), ResidualError> {
    check_sample(residuals)?;
    let n_bins = rule.n_bins(residuals);
    if n_bins < MIN_BINS {
        return Err(ResidualError::InvalidParameter(format!("n_bins must be >= {MIN_BINS}")));
    }
    Ok((fit::SampleStats::new(residuals), Histogram::new(residuals, n_bins)))
}

/// Maximum-likelihood fit of one family, scored with Freedman–Diaconis bins.
pub fn fit_distribution(residuals: &[f64], family: Family) -> Result<ResidualDistribution, ResidualError> {
    fit_distribution_with(residuals, family, BinRule::FreedmanDiaconis)
}

pub fn fit_distribution_with(
    residuals: &[f64],
    family: Family,
    rule: BinRule,
) -> Result<ResidualDistribution, ResidualError> {
    let (stats, hist) = prepare(residuals, rule)?;
    fit_scored(residuals, family, &stats, rule, &hist)
}

/// A family with its fit or the reason it failed.
pub type FamilyFit = (Family, Result<ResidualDistribution, ResidualError>);

/// Fits every family on the same bins, in parallel. Results keep the order
/// of `families`.
pub fn fit_all(residuals: &[f64], families: &[Family], rule: BinRule) -> Result<Vec<FamilyFit>, ResidualError> {
    let (stats, hist) = prepare(residuals, rule)?;
    Ok(families.par_iter().map(|&f| (f, fit_scored(residuals, f, &stats, rule, &hist))).collect())
}

/// The fit with the lowest SSE; ties go to fewer parameters, then family
/// name.
pub fn select_best(residuals: &[f64], families: &[Family]) -> Result<ResidualDistribution, ResidualError> {
    select_best_with(residuals, families, BinRule::FreedmanDiaconis)
}

pub fn select_best_with(
    residuals: &[f64],
    families: &[Family],
    rule: BinRule,
) -> Result<ResidualDistribution, ResidualError> {
    if families.is_empty() {
        return Err(ResidualError::InvalidParameter("no families given".into()));
    }
    let mut ok = Vec::new();
    let mut failed = Vec::new();
    for (f, r) in fit_all(residuals, families, rule)? {
        match r {
            Ok(d) => ok.push(d),
            Err(e) => failed.push((f, e.to_string())),
        }
    }
    ok.into_iter()
        .min_by(|a, b| {
            let sse = |d: &ResidualDistribution| d.sse.unwrap_or(f64::INFINITY);
            sse(a).total_cmp(&sse(b)).then(a.n_params().cmp(&b.n_params())).then(a.family.name().cmp(b.family.name()))
        })
        .ok_or(ResidualError::AllFitsFailed(failed))
}
