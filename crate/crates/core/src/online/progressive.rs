use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{OnlineError, OnlineLearner};
use crate::data::{FeatureMatrix, MinMaxScaler};
use crate::eval::{compute_metrics, persistence_baseline, MetricReport};

/// Per-step outcome of a progressive validation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProgressiveReport {
    pub dates: Vec<NaiveDate>,
    pub actual: Vec<f64>,
    /// `None` where the learner could not predict.
    pub predicted: Vec<Option<f64>>,
    /// `actual − predicted` in target units.
    pub residuals: Vec<Option<f64>>,
    /// (stream row, message) for every failed predict or learn.
    pub step_errors: Vec<(usize, String)>,
    pub pretrain_errors: usize,
    /// Stream predictions clamped to the target domain.
    pub clamped_steps: usize,
    /// Over the steps that produced a prediction; MASE against the
    /// previous actual.
    pub metrics: Option<MetricReport>,
}

impl ProgressiveReport {
    pub fn missing_predictions(&self) -> usize {
        self.predicted.iter().filter(|p| p.is_none()).count()
    }
}

fn check_order(m: &FeatureMatrix) -> Result<(), OnlineError> {
    match m.dates.windows(2).position(|w| w[1] <= w[0]) {
        Some(i) => Err(OnlineError::UnorderedStream(i + 1)),
        None => Ok(()),
    }
}

/// One pass of `learn_one` over `pretrain`, then for each `stream` row:
/// predict, record the residual, and only then learn from the row.
///
/// With `target_scaler` the learner sees scaled targets and predictions are
/// mapped back before residuals are taken.
pub fn progressive_validation<L: OnlineLearner>(
    learner: &mut L,
    pretrain: &FeatureMatrix,
    stream: &FeatureMatrix,
    target_scaler: Option<&MinMaxScaler>,
) -> Result<ProgressiveReport, OnlineError> {
    check_order(pretrain)?;
    check_order(stream)?;
    if let (Some(a), Some(b)) = (pretrain.dates.last(), stream.dates.first()) {
        if b <= a {
            return Err(OnlineError::UnorderedStream(0));
        }
    }
    let to_model = |y: f64| target_scaler.map_or(y, |s| s.scale(0, y));
    let from_model = |z: f64| target_scaler.map_or(z, |s| s.unscale(0, z));

    let mut pretrain_errors = 0;
    for (row, &y) in pretrain.x.rows().zip(&pretrain.targets) {
        if learner.learn_one(row, to_model(y)).is_err() {
            pretrain_errors += 1;
        }
    }

    let n = stream.len();
    let mut predicted = Vec::with_capacity(n);
    let mut residuals = Vec::with_capacity(n);
    let mut step_errors = Vec::new();
    let mut clamped_steps = 0;
    for (i, (row, &y)) in stream.x.rows().zip(&stream.targets).enumerate() {
        match learner.predict_flagged(row) {
            Ok(z) => {
                clamped_steps += usize::from(z.clamped);
                let p = from_model(z.value);
                predicted.push(Some(p));
                residuals.push(Some(y - p));
            }
            Err(e) => {
                predicted.push(None);
                residuals.push(None);
                step_errors.push((i, e.to_string()));
            }
        }
        if let Err(e) = learner.learn_one(row, to_model(y)) {
            step_errors.push((i, e.to_string()));
        }
    }

    let baseline = persistence_baseline(&stream.targets, pretrain.targets.last().copied().unwrap_or(f64::NAN));
    let (mut a, mut p, mut b) = (Vec::new(), Vec::new(), Vec::new());
    for i in 0..n {
        if let Some(pi) = predicted[i] {
            a.push(stream.targets[i]);
            p.push(pi);
            b.push(baseline[i]);
        }
    }
    let naive = b.iter().all(|v| v.is_finite()).then_some(b.as_slice());
    let metrics = compute_metrics(&a, &p, naive).ok();

    Ok(ProgressiveReport {
        dates: stream.dates.clone(),
        actual: stream.targets.clone(),
        predicted,
        residuals,
        step_errors,
        pretrain_errors,
        clamped_steps,
        metrics,
    })
}
