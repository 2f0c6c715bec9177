//! Accuracy metrics, cross-validated grid search, reserve exceedance and
//! the per-hour training pipelines.

mod cv;
mod metrics;
mod orchestrate;
mod reserve;

pub use cv::{
    cv_splits, grid_search, write_grid_csv, CvMode, Fold, GridRow, GridSearchConfig, RowStatus, GRID_COLUMNS,
    TIMING_COLUMNS,
};
pub use metrics::{compute_metrics, persistence_baseline, MetricReport};
pub use orchestrate::{
    per_hour_online, per_hour_orchestrate, prepare_hour, HourlyMetrics, OfflineRun, OnlineRun, PipelineConfig,
    PooledResidual, PreparedHour,
};
pub use reserve::{fraction_within, percentile, reserve_analysis, ReserveReport, AVG_RESERVE_MWH, MAX_RESERVE_MWH};

use thiserror::Error;

use crate::data::DataError;
use crate::offline::FitError;
use crate::online::OnlineError;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("length mismatch: {actual} actual values, {predicted} predictions")]
    LengthMismatch { actual: usize, predicted: usize },
    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("inputs contain non-finite values")]
    NonFinite,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error(transparent)]
    Online(#[from] OnlineError),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}
