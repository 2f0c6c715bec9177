use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{compute_metrics, EvalError};
use crate::data::MinMaxScaler;
use crate::offline::{Algorithm, AlgorithmKind, FitError, HyperparamGrid, Hyperparams};
use crate::rng::{member_seed, seeded};
use crate::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CvMode {
    /// Shuffled K-fold. Rows of a demand series are time-correlated, so this
    /// leaks information from the future into training folds.
    #[default]
    Random,
    /// Expanding window: fold `i` trains on blocks `0..=i`, tests on `i + 1`.
    TimeOrdered,
}

impl FromStr for CvMode {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "random" => Ok(Self::Random),
            "time_ordered" => Ok(Self::TimeOrdered),
            other => Err(EvalError::InvalidParameter(format!("unknown CV mode `{other}`"))),
        }
    }
}

/// Contiguous blocks of near-equal size (larger blocks first).
fn blocks(n: usize, k: usize) -> Vec<std::ops::Range<usize>> {
    let (base, extra) = (n / k, n % k);
    let mut start = 0;
    (0..k)
        .map(|i| {
            let len = base + usize::from(i < extra);
            let r = start..start + len;
            start += len;
            r
        })
        .collect()
}

/// Train and test row indices of one fold.
pub type Fold = (Vec<usize>, Vec<usize>);

/// Train/test row indices for each fold.
pub fn cv_splits(n: usize, n_splits: usize, mode: CvMode, seed: u64) -> Result<Vec<Fold>, EvalError> {
    if n_splits < 2 {
        return Err(EvalError::InvalidParameter("n_splits must be >= 2".into()));
    }
    match mode {
        CvMode::Random => {
            if n < n_splits {
                return Err(EvalError::TooFewSamples(n));
            }
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut seeded(seed));
            Ok(blocks(n, n_splits)
                .into_iter()
                .map(|test| {
                    let train = order[..test.start].iter().chain(&order[test.end..]).copied().collect();
                    let mut test: Vec<usize> = order[test].to_vec();
                    test.sort_unstable();
                    (train, test)
                })
                .collect())
        }
        CvMode::TimeOrdered => {
            if n < n_splits + 1 {
                return Err(EvalError::TooFewSamples(n));
            }
            let b = blocks(n, n_splits + 1);
            Ok((0..n_splits).map(|i| ((0..b[i].end).collect(), b[i + 1].clone().collect())).collect())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status", content = "reason")]
pub enum RowStatus {
    Ok,
    Unsupported(String),
    Failed(String),
}

/// Cross-validated summary of one hyperparameter combination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub rank: usize,
    pub estimator: AlgorithmKind,
    pub params: Hyperparams,
    pub status: RowStatus,
    pub n_folds: usize,
    pub mean_mae: f64,
    pub sd_mae: f64,
    pub mean_mse: f64,
    pub sd_mse: f64,
    pub mean_rmse: f64,
    pub mean_r2: Option<f64>,
    pub mean_fit_time: f64,
    pub mean_score_time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSearchConfig {
    pub n_splits: usize,
    pub mode: CvMode,
    pub seed: u64,
}

impl Default for GridSearchConfig {
    fn default() -> Self {
        Self { n_splits: 10, mode: CvMode::Random, seed: 0 }
    }
}

struct FoldScore {
    mae: f64,
    mse: f64,
    r2: Option<f64>,
    fit_time: f64,
    score_time: f64,
}

fn run_fold(
    alg: &Algorithm,
    x: &Matrix,
    y: &[f64],
    (train, test): &(Vec<usize>, Vec<usize>),
    seed: u64,
    target_scaler: Option<&MinMaxScaler>,
) -> Result<FoldScore, FitError> {
    let xt = x.select_rows(train);
    let yt: Vec<f64> = train.iter().map(|&i| y[i]).collect();
    let t0 = Instant::now();
    let model = alg.fit(&xt, &yt, seed)?;
    let fit_time = t0.elapsed().as_secs_f64();
    let t1 = Instant::now();
    let mut pred = model.predict(&x.select_rows(test))?;
    let score_time = t1.elapsed().as_secs_f64();
    let mut actual: Vec<f64> = test.iter().map(|&i| y[i]).collect();
    if let Some(s) = target_scaler {
        pred.iter_mut().for_each(|p| *p = s.unscale(0, *p));
        actual.iter_mut().for_each(|a| *a = s.unscale(0, *a));
    }
    let m = compute_metrics(&actual, &pred, None)
        .map_err(|e| FitError::InvalidParameter(format!("scoring failed: {e}")))?;
    Ok(FoldScore { mae: m.mae, mse: m.mse, r2: m.r_squared, fit_time, score_time })
}

fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = if v.len() > 1 { v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    (mean, var.sqrt())
}

/// Cross-validates every combination of `grid` for `kind`.
///
/// `y` is what the learner is trained on; when `target_scaler` is given the
/// metrics are reported after mapping predictions and actuals back through
/// it. Every combination sees the same folds and per-fold seeds. Failed
/// combinations are kept, ranked after all successful ones.
pub fn grid_search(
    kind: AlgorithmKind,
    grid: &HyperparamGrid,
    x: &Matrix,
    y: &[f64],
    config: &GridSearchConfig,
    target_scaler: Option<&MinMaxScaler>,
) -> Result<Vec<GridRow>, EvalError> {
    if x.nrows() != y.len() {
        return Err(EvalError::LengthMismatch { actual: y.len(), predicted: x.nrows() });
    }
    let combos = grid.combinations().map_err(|e| EvalError::InvalidParameter(e.to_string()))?;
    let folds = cv_splits(x.nrows(), config.n_splits, config.mode, config.seed)?;

    let mut rows: Vec<GridRow> = combos
        .into_par_iter()
        .map(|params| {
            let empty = |status| GridRow {
                rank: 0,
                estimator: kind,
                params: params.clone(),
                status,
                n_folds: 0,
                mean_mae: f64::NAN,
                sd_mae: f64::NAN,
                mean_mse: f64::NAN,
                sd_mse: f64::NAN,
                mean_rmse: f64::NAN,
                mean_r2: None,
                mean_fit_time: f64::NAN,
                mean_score_time: f64::NAN,
            };
            let alg = match Algorithm::from_params(kind, &params) {
                Ok(a) => a,
                Err(e @ FitError::UnsupportedKernel(_)) => return empty(RowStatus::Unsupported(e.to_string())),
                Err(e) => return empty(RowStatus::Failed(e.to_string())),
            };
            let scores: Result<Vec<FoldScore>, FitError> = folds
                .par_iter()
                .enumerate()
                .map(|(i, f)| run_fold(&alg, x, y, f, member_seed(config.seed, i), target_scaler))
                .collect();
            let scores = match scores {
                Ok(s) => s,
                Err(e) => return empty(RowStatus::Failed(e.to_string())),
            };
            let mae: Vec<f64> = scores.iter().map(|s| s.mae).collect();
            let mse: Vec<f64> = scores.iter().map(|s| s.mse).collect();
            let rmse: Vec<f64> = mse.iter().map(|m| m.sqrt()).collect();
            let r2: Vec<f64> = scores.iter().filter_map(|s| s.r2).collect();
            let (mean_mae, sd_mae) = mean_sd(&mae);
            let (mean_mse, sd_mse) = mean_sd(&mse);
            GridRow {
                rank: 0,
                estimator: kind,
                params,
                status: RowStatus::Ok,
                n_folds: scores.len(),
                mean_mae,
                sd_mae,
                mean_mse,
                sd_mse,
                mean_rmse: mean_sd(&rmse).0,
                mean_r2: (!r2.is_empty()).then(|| mean_sd(&r2).0),
                mean_fit_time: mean_sd(&scores.iter().map(|s| s.fit_time).collect::<Vec<_>>()).0,
                mean_score_time: mean_sd(&scores.iter().map(|s| s.score_time).collect::<Vec<_>>()).0,
            }
        })
        .collect();

    rows.sort_by(|a, b| {
        let ok = |r: &GridRow| r.status != RowStatus::Ok;
        ok(a)
            .cmp(&ok(b))
            .then(a.mean_mae.total_cmp(&b.mean_mae))
            .then(a.mean_fit_time.total_cmp(&b.mean_fit_time))
            .then_with(|| a.params.label().cmp(&b.params.label()))
    });
    for (i, r) in rows.iter_mut().enumerate() {
        r.rank = i + 1;
    }
    Ok(rows)
}

pub const GRID_COLUMNS: [&str; 14] = [
    "rank",
    "estimator",
    "params",
    "status",
    "n_folds",
    "mean_fit_time",
    "mean_score_time",
    "mean_mse",
    "sd_mse",
    "mean_rmse",
    "mean_mae",
    "sd_mae",
    "mean_r2",
    "reason",
];

/// Columns holding wall-clock timings.
pub const TIMING_COLUMNS: [&str; 2] = ["mean_fit_time", "mean_score_time"];

fn fmt(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        v.to_string()
    }
}

pub fn write_grid_csv<W: Write>(rows: &[GridRow], out: W) -> Result<(), EvalError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(GRID_COLUMNS)?;
    for r in rows {
        let (status, reason) = match &r.status {
            RowStatus::Ok => ("ok", String::new()),
            RowStatus::Unsupported(s) => ("unsupported", s.clone()),
            RowStatus::Failed(s) => ("failed", s.clone()),
        };
        w.write_record([
            r.rank.to_string(),
            r.estimator.to_string(),
            r.params.label(),
            status.to_string(),
            r.n_folds.to_string(),
            fmt(r.mean_fit_time),
            fmt(r.mean_score_time),
            fmt(r.mean_mse),
            fmt(r.sd_mse),
            fmt(r.mean_rmse),
            fmt(r.mean_mae),
            fmt(r.sd_mae),
            r.mean_r2.map(fmt).unwrap_or_default(),
            reason,
        ])?;
    }
    w.flush()?;
    Ok(())
}
