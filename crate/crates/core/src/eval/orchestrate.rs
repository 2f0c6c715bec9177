use std::time::Instant;

use chrono::{Duration, NaiveDate, NaiveDateTime};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{compute_metrics, EvalError, MetricReport};
use crate::data::{
    build_features, split_train_test, CalendarFeatures, DemandSeries, FeatureConfig, FeatureMatrix, MinMaxScaler,
};
use crate::linalg::independent_columns;
use crate::offline::{Algorithm, ModelDocument};
use crate::online::{
    boxcox_transform, progressive_validation, OnlineAlgorithm, OnlineCheckpoint, OnlineRegressorState,
};
use crate::rng::member_seed;
use crate::Matrix;

/// Relative residual norm below which a training column counts as a linear
/// combination of earlier ones.
const COLLINEAR_RTOL: f64 = 1e-9;

/// Shared settings of the per-hour pipelines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub features: FeatureConfig,
    /// First test date; earlier rows train.
    pub test_start: NaiveDate,
    /// Train on min-max scaled targets and map predictions back.
    pub scale_targets: bool,
}

/// Scaled train/test design for one target hour.
#[derive(Debug, Clone)]
pub struct PreparedHour {
    pub hour: u32,
    pub train: FeatureMatrix,
    pub test: FeatureMatrix,
    pub feature_scaler: MinMaxScaler,
    pub target_scaler: Option<MinMaxScaler>,
    /// Training columns that vary and are not linear combinations of earlier
    /// ones (with an intercept); the rest are dropped.
    pub columns: Vec<usize>,
    /// Model-space training targets.
    pub y_train: Vec<f64>,
}

fn keep_columns(m: &FeatureMatrix, cols: &[usize]) -> FeatureMatrix {
    let data = m.x.rows().flat_map(|r| cols.iter().map(move |&j| r[j])).collect();
    FeatureMatrix {
        x: Matrix::new(m.len(), cols.len(), data),
        feature_names: cols.iter().map(|&j| m.feature_names[j].clone()).collect(),
        ..m.clone()
    }
}

/// Builds, splits and scales the design of `hour`. Features are scaled with
/// training-row statistics; constant and linearly dependent training
/// columns are dropped.
pub fn prepare_hour(
    series: &DemandSeries,
    calendar: &[CalendarFeatures],
    hour: u32,
    cfg: &PipelineConfig,
    scale_targets: bool,
) -> Result<PreparedHour, EvalError> {
    let all = build_features(series, calendar, hour, &cfg.features)?;
    let (train, test) = split_train_test(&all, cfg.test_start)?;
    let feature_scaler = train.fit_scaler()?;
    let scaled = train.apply_scaler(&feature_scaler)?;
    let varying: Vec<usize> = (0..train.width()).filter(|&j| feature_scaler.max[j] > feature_scaler.min[j]).collect();
    let independent = independent_columns(&keep_columns(&scaled, &varying).x, COLLINEAR_RTOL);
    let columns: Vec<usize> = independent.iter().map(|&k| varying[k]).collect();
    let train = keep_columns(&scaled, &columns);
    let test = keep_columns(&test.apply_scaler(&feature_scaler)?, &columns);
    let target_scaler = if scale_targets { Some(MinMaxScaler::fit_values(&train.targets)?) } else { None };
    let y_train = match &target_scaler {
        Some(s) => train.targets.iter().map(|&y| s.scale(0, y)).collect(),
        None => train.targets.clone(),
    };
    Ok(PreparedHour { hour, train, test, feature_scaler, target_scaler, columns, y_train })
}

/// One test-set forecast.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PooledResidual {
    pub timestamp: NaiveDateTime,
    pub actual: f64,
    pub predicted: f64,
    /// `actual − predicted`, MWh.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HourlyMetrics {
    pub hour: u32,
    pub metrics: MetricReport,
}

#[derive(Debug, Clone)]
pub struct OfflineRun {
    /// Indexed by hour of day.
    pub models: Vec<ModelDocument>,
    pub hourly: Vec<HourlyMetrics>,
    /// All test forecasts in timestamp order.
    pub pooled: Vec<PooledResidual>,
    pub metrics: MetricReport,
}

#[derive(Debug, Clone)]
pub struct OnlineRun {
    pub checkpoints: Vec<OnlineCheckpoint>,
    pub hourly: Vec<HourlyMetrics>,
    pub pooled: Vec<PooledResidual>,
    pub metrics: MetricReport,
    /// Stream steps without a prediction, summed over hours.
    pub missing_predictions: usize,
}

/// Metrics over pooled forecasts; MASE against demand 24 hours earlier.
fn pooled_metrics(series: &DemandSeries, pooled: &[PooledResidual]) -> Result<MetricReport, EvalError> {
    let actual: Vec<f64> = pooled.iter().map(|p| p.actual).collect();
    let predicted: Vec<f64> = pooled.iter().map(|p| p.predicted).collect();
    let naive: Option<Vec<f64>> = pooled.iter().map(|p| series.demand_at(p.timestamp - Duration::hours(24))).collect();
    compute_metrics(&actual, &predicted, naive.as_deref())
}

fn pool(mut rows: Vec<PooledResidual>) -> Vec<PooledResidual> {
    rows.sort_by_key(|r| r.timestamp);
    rows
}

/// Trains one offline model per target hour and pools the test residuals.
pub fn per_hour_orchestrate(
    series: &DemandSeries,
    calendar: &[CalendarFeatures],
    cfg: &PipelineConfig,
    algorithm: &Algorithm,
    seed: u64,
) -> Result<OfflineRun, EvalError> {
    let per_hour: Vec<(ModelDocument, HourlyMetrics, Vec<PooledResidual>)> = (0..24u32)
        .into_par_iter()
        .map(|hour| {
            let h = prepare_hour(series, calendar, hour, cfg, cfg.scale_targets)?;
            let t0 = Instant::now();
            let model = algorithm.fit(&h.train.x, &h.y_train, member_seed(seed, hour as usize))?;
            let fit_time = t0.elapsed().as_secs_f64();
            let t1 = Instant::now();
            let raw = model.predict(&h.test.x)?;
            let score_time = t1.elapsed().as_secs_f64();
            let predicted: Vec<f64> = match &h.target_scaler {
                Some(s) => raw.iter().map(|&z| s.unscale(0, z)).collect(),
                None => raw,
            };
            let rows: Vec<PooledResidual> = h
                .test
                .dates
                .iter()
                .zip(&h.test.targets)
                .zip(&predicted)
                .map(|((d, &a), &p)| PooledResidual {
                    timestamp: d.and_hms_opt(hour, 0, 0).expect("valid hour"),
                    actual: a,
                    predicted: p,
                    residual: a - p,
                })
                .collect();
            let mut metrics = pooled_metrics(series, &rows)?;
            metrics.fit_time = fit_time;
            metrics.score_time = score_time;
            let doc = ModelDocument::new(
                model,
                h.train.feature_names.clone(),
                Some(h.feature_scaler.clone()),
                h.target_scaler.clone(),
            )
            .with_columns(h.columns.clone());
            Ok((doc, HourlyMetrics { hour, metrics }, rows))
        })
        .collect::<Result<_, EvalError>>()?;

    let mut models = Vec::with_capacity(24);
    let mut hourly = Vec::with_capacity(24);
    let mut rows = Vec::new();
    for (doc, m, r) in per_hour {
        models.push(doc);
        hourly.push(m);
        rows.extend(r);
    }
    let pooled = pool(rows);
    let mut metrics = pooled_metrics(series, &pooled)?;
    metrics.fit_time = hourly.iter().map(|h| h.metrics.fit_time).sum();
    metrics.score_time = hourly.iter().map(|h| h.metrics.score_time).sum();
    Ok(OfflineRun { models, hourly, pooled, metrics })
}

/// Runs progressive validation per target hour: one pass over the training
/// rows, then predict-then-learn over the test rows.
///
/// Box-Cox learners see raw targets (the transform needs them positive);
/// with `cfg.scale_targets` their transformed targets are min-max scaled
/// instead. The others follow `cfg.scale_targets`.
pub fn per_hour_online(
    series: &DemandSeries,
    calendar: &[CalendarFeatures],
    cfg: &PipelineConfig,
    algorithm: &OnlineAlgorithm,
    seed: u64,
) -> Result<OnlineRun, EvalError> {
    let boxcox_lambda = match algorithm {
        OnlineAlgorithm::BoxCox { lambda, .. } => Some(*lambda),
        _ => None,
    };
    let scale_targets = cfg.scale_targets && boxcox_lambda.is_none();
    let per_hour: Vec<(OnlineCheckpoint, HourlyMetrics, Vec<PooledResidual>, usize)> = (0..24u32)
        .into_par_iter()
        .map(|hour| {
            let h = prepare_hour(series, calendar, hour, cfg, scale_targets)?;
            let mut state =
                OnlineRegressorState::new(algorithm.clone(), h.train.width(), member_seed(seed, hour as usize))?;
            if let (Some(lambda), true) = (boxcox_lambda, cfg.scale_targets) {
                let z =
                    h.train.targets.iter().map(|&y| boxcox_transform(y, lambda)).collect::<Result<Vec<f64>, _>>()?;
                state = state.with_transformed_scaler(MinMaxScaler::fit_values(&z)?);
            }
            let t0 = Instant::now();
            let report = progressive_validation(&mut state, &h.train, &h.test, h.target_scaler.as_ref())?;
            let elapsed = t0.elapsed().as_secs_f64();
            let rows: Vec<PooledResidual> = report
                .dates
                .iter()
                .zip(&report.actual)
                .zip(&report.predicted)
                .filter_map(|((d, &a), p)| {
                    p.map(|p| PooledResidual {
                        timestamp: d.and_hms_opt(hour, 0, 0).expect("valid hour"),
                        actual: a,
                        predicted: p,
                        residual: a - p,
                    })
                })
                .collect();
            let mut metrics = pooled_metrics(series, &rows)?;
            metrics.fit_time = elapsed;
            let checkpoint = state
                .to_checkpoint(h.train.feature_names.clone(), Some(h.feature_scaler.clone()), h.target_scaler.clone())
                .with_columns(h.columns.clone());
            Ok((checkpoint, HourlyMetrics { hour, metrics }, rows, report.missing_predictions()))
        })
        .collect::<Result<_, EvalError>>()?;

    let mut checkpoints = Vec::with_capacity(24);
    let mut hourly = Vec::with_capacity(24);
    let mut rows = Vec::new();
    let mut missing_predictions = 0;
    for (c, m, r, miss) in per_hour {
        checkpoints.push(c);
        hourly.push(m);
        rows.extend(r);
        missing_predictions += miss;
    }
    let pooled = pool(rows);
    let mut metrics = pooled_metrics(series, &pooled)?;
    metrics.fit_time = hourly.iter().map(|h| h.metrics.fit_time).sum();
    Ok(OnlineRun { checkpoints, hourly, pooled, metrics, missing_predictions })
}
