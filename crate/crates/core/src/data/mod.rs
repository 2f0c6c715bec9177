//! Demand series, calendar labelling and per-hour supervised design matrices.

mod calendar;
mod features;
mod scaler;
mod series;
mod synth;

pub use calendar::{label_calendar, CalendarFeatures, MonthDay, SeasonInterval, SeasonTable};
pub use features::{build_features, split_train_test, FeatureConfig, FeatureMatrix};
pub use scaler::MinMaxScaler;
pub use series::{ingest_demand_csv, parse_holidays, read_holidays, write_demand_csv, ColumnMap, DemandSeries};
pub use synth::{drift_benchmark_series, synth_demand, SynthParams};

use chrono::{NaiveDate, NaiveDateTime};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("line {line}: unparsable timestamp `{value}`")]
    UnparsableTimestamp { line: usize, value: String },
    #[error("line {line}: unparsable demand `{value}`")]
    UnparsableDemand { line: usize, value: String },
    #[error("line {line}: unparsable holiday date `{value}`")]
    UnparsableHoliday { line: usize, value: String },
    #[error("duplicate timestamp {0}")]
    DuplicateTimestamp(NaiveDateTime),
    #[error("gap in hourly series: {missing} is missing")]
    GapInSeries { missing: NaiveDateTime },
    #[error("negative demand {value} at {timestamp}")]
    NegativeDemand { timestamp: NaiveDateTime, value: f64 },
    #[error("non-finite demand at {0}")]
    NonFiniteDemand(NaiveDateTime),
    #[error("series is empty")]
    EmptySeries,
    #[error("season intervals overlap on {0}")]
    OverlappingSeasons(NaiveDate),
    #[error("no season covers {0}")]
    UncoveredDate(NaiveDate),
    #[error("invalid season table: {0}")]
    InvalidSeasonTable(String),
    #[error("series too short: no row has all lags available")]
    SeriesTooShort,
    #[error("dimension mismatch: expected {expected} columns, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("empty split: {train} train rows, {test} test rows")]
    EmptySplit { train: usize, test: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
