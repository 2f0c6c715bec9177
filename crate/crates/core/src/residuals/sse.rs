use serde::{Deserialize, Serialize};

use crate::eval::percentile;

pub const MIN_BINS: usize = 10;
pub const MAX_BINS: usize = 200;

/// How histogram bins are chosen for SSE scoring.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum BinRule {
    /// `h = 2 IQR n^(-1/3)`, count clamped to [10, 200].
    #[default]
    FreedmanDiaconis,
    Fixed {
        n_bins: usize,
    },
}

impl BinRule {
    pub fn n_bins(self, data: &[f64]) -> usize {
        match self {
            Self::FreedmanDiaconis => freedman_diaconis_bins(data),
            Self::Fixed { n_bins } => n_bins,
        }
    }
}

pub fn freedman_diaconis_bins(data: &[f64]) -> usize {
    let mut sorted = data.to_vec();
    sorted.sort_by(f64::total_cmp);
    let iqr = percentile(&sorted, 0.75) - percentile(&sorted, 0.25);
    let range = sorted[sorted.len() - 1] - sorted[0];
    let h = 2.0 * iqr * (data.len() as f64).powf(-1.0 / 3.0);
    if !(h > 0.0) || !(range > 0.0) {
        return MIN_BINS;
    }
    ((range / h).ceil() as usize).clamp(MIN_BINS, MAX_BINS)
}

/// Equal-width density histogram over `[min, max]`; the top edge is closed.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub lo: f64,
    pub width: f64,
    pub density: Vec<f64>,
}

impl Histogram {
    pub fn new(data: &[f64], n_bins: usize) -> Self {
        let lo = data.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = data.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let width = (hi - lo) / n_bins as f64;
        let mut counts = vec![0usize; n_bins];
        for &x in data {
            let i = (((x - lo) / width) as usize).min(n_bins - 1);
            counts[i] += 1;
        }
        let scale = 1.0 / (data.len() as f64 * width);
        Self { lo, width, density: counts.into_iter().map(|c| c as f64 * scale).collect() }
    }

    pub fn centers(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.density.len()).map(|i| self.lo + (i as f64 + 0.5) * self.width)
    }

    /// `Σ (empirical density − pdf(center))²`.
    pub fn sse(&self, pdf: impl Fn(f64) -> f64) -> f64 {
        self.centers().zip(&self.density).map(|(c, d)| (d - pdf(c)).powi(2)).sum()
    }
}
