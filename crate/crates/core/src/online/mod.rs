//! Incremental regressors with a predict-then-learn interface.

mod boxcox;
mod progressive;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use boxcox::{boxcox_inverse, boxcox_inverse_clamped, boxcox_transform};
pub use progressive::{progressive_validation, ProgressiveReport};

use crate::data::MinMaxScaler;
use crate::linalg::{dot, norm_sq};
use crate::offline::{Activation, Hyperparams, Network, ParamValue};
use crate::rng::seeded;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OnlineError {
    #[error("dimension mismatch: state expects {expected} features, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("update {update} produced non-finite weights")]
    NonFiniteUpdate { update: u64 },
    #[error("Box-Cox needs a positive target, got {0}")]
    NonPositiveTarget(f64),
    #[error("loss diverged after {update} updates")]
    DivergedLoss { update: u64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unknown online algorithm `{0}`")]
    UnknownAlgorithm(String),
    #[error("stream is not strictly time ordered at row {0}")]
    UnorderedStream(usize),
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
}

/// Non-fatal outcome of a single `learn_one`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LearnNote {
    Updated,
    /// Passive-aggressive loss was zero.
    Passive,
    /// Zero-norm input with positive loss and no intercept: no finite step.
    ZeroNormInput,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OnlineKind {
    Linear,
    PassiveAggressive,
    BoxCox,
    Mlp,
}

impl OnlineKind {
    pub const ALL: [OnlineKind; 4] = [Self::Linear, Self::PassiveAggressive, Self::BoxCox, Self::Mlp];

    pub fn name(self) -> &'static str {
        match self {
            Self::Linear => "online_linear",
            Self::PassiveAggressive => "passive_aggressive",
            Self::BoxCox => "boxcox",
            Self::Mlp => "online_mlp",
        }
    }
}

impl fmt::Display for OnlineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OnlineKind {
    type Err = OnlineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| OnlineError::UnknownAlgorithm(s.to_string()))
    }
}

/// A configured online learner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OnlineAlgorithm {
    Linear {
        learning_rate: f64,
    },
    PassiveAggressive {
        c: f64,
        epsilon: f64,
        fit_intercept: bool,
        /// Accepted for configuration compatibility; a single online pass
        /// ignores it.
        max_iter: usize,
    },
    BoxCox {
        lambda: f64,
        learning_rate: f64,
    },
    Mlp {
        hidden_sizes: Vec<usize>,
        activation: Activation,
        learning_rate: f64,
        l2_alpha: f64,
    },
}

fn get_f64(p: &Hyperparams, name: &str, default: f64) -> Result<f64, OnlineError> {
    match p.get(name) {
        None => Ok(default),
        Some(ParamValue::Float(v)) => Ok(*v),
        Some(ParamValue::Int(v)) => Ok(*v as f64),
        Some(v) => Err(OnlineError::InvalidParameter(format!("{name} must be numeric, got {v}"))),
    }
}

impl OnlineAlgorithm {
    pub fn kind(&self) -> OnlineKind {
        match self {
            Self::Linear { .. } => OnlineKind::Linear,
            Self::PassiveAggressive { .. } => OnlineKind::PassiveAggressive,
            Self::BoxCox { .. } => OnlineKind::BoxCox,
            Self::Mlp { .. } => OnlineKind::Mlp,
        }
    }

    pub fn default_for(kind: OnlineKind) -> Self {
        match kind {
            OnlineKind::Linear => Self::Linear { learning_rate: 0.01 },
            OnlineKind::PassiveAggressive => {
                Self::PassiveAggressive { c: 1.0, epsilon: 0.1, fit_intercept: true, max_iter: 1 }
            }
            OnlineKind::BoxCox => Self::BoxCox { lambda: 0.1, learning_rate: 0.01 },
            OnlineKind::Mlp => Self::Mlp {
                hidden_sizes: vec![50],
                activation: Activation::Relu,
                learning_rate: 0.001,
                l2_alpha: 0.0001,
            },
        }
    }

    /// Builds from named hyperparameters over the defaults of `kind`.
    pub fn from_params(kind: OnlineKind, p: &Hyperparams) -> Result<Self, OnlineError> {
        let allowed: &[&str] = match kind {
            OnlineKind::Linear => &["learning_rate"],
            OnlineKind::PassiveAggressive => &["C", "epsilon", "fit_intercept", "max_iter"],
            OnlineKind::BoxCox => &["lambda", "learning_rate"],
            OnlineKind::Mlp => &["hidden_layer_sizes", "activation", "learning_rate", "alpha"],
        };
        if let Some(k) = p.0.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(OnlineError::InvalidParameter(format!("`{k}` is not a parameter of {kind}")));
        }
        let alg = match Self::default_for(kind) {
            Self::Linear { learning_rate } => {
                Self::Linear { learning_rate: get_f64(p, "learning_rate", learning_rate)? }
            }
            Self::PassiveAggressive { c, epsilon, fit_intercept, max_iter } => Self::PassiveAggressive {
                c: get_f64(p, "C", c)?,
                epsilon: get_f64(p, "epsilon", epsilon)?,
                fit_intercept: match p.get("fit_intercept") {
                    None => fit_intercept,
                    Some(ParamValue::Bool(b)) => *b,
                    Some(v) => {
                        return Err(OnlineError::InvalidParameter(format!("fit_intercept must be bool, got {v}")))
                    }
                },
                max_iter: get_f64(p, "max_iter", max_iter as f64)? as usize,
            },
            Self::BoxCox { lambda, learning_rate } => Self::BoxCox {
                lambda: get_f64(p, "lambda", lambda)?,
                learning_rate: get_f64(p, "learning_rate", learning_rate)?,
            },
            Self::Mlp { hidden_sizes, activation, learning_rate, l2_alpha } => Self::Mlp {
                hidden_sizes: match p.get("hidden_layer_sizes") {
                    None => hidden_sizes,
                    Some(ParamValue::Int(v)) if *v > 0 => vec![*v as usize],
                    Some(ParamValue::IntList(l)) if !l.is_empty() && l.iter().all(|v| *v > 0) => {
                        l.iter().map(|v| *v as usize).collect()
                    }
                    Some(v) => return Err(OnlineError::InvalidParameter(format!("bad hidden_layer_sizes {v}"))),
                },
                activation: match p.get("activation") {
                    None => activation,
                    Some(ParamValue::Text(s)) if s == "tanh" => Activation::Tanh,
                    Some(ParamValue::Text(s)) if s == "relu" => Activation::Relu,
                    Some(v) => return Err(OnlineError::InvalidParameter(format!("bad activation {v}"))),
                },
                learning_rate: get_f64(p, "learning_rate", learning_rate)?,
                l2_alpha: get_f64(p, "alpha", l2_alpha)?,
            },
        };
        alg.validate()?;
        Ok(alg)
    }

    fn validate(&self) -> Result<(), OnlineError> {
        let bad = |m: &str| Err(OnlineError::InvalidParameter(m.to_string()));
        match self {
            Self::Linear { learning_rate } | Self::BoxCox { learning_rate, .. }
                if !(*learning_rate >= 0.0 && learning_rate.is_finite()) =>
            {
                bad("learning_rate must be >= 0")
            }
            Self::BoxCox { lambda, .. } if !lambda.is_finite() => bad("lambda must be finite"),
            Self::PassiveAggressive { c, .. } if !(*c > 0.0 && c.is_finite()) => bad("C must be > 0"),
            Self::PassiveAggressive { epsilon, .. } if !(*epsilon >= 0.0) => bad("epsilon must be >= 0"),
            Self::Mlp { hidden_sizes, .. } if hidden_sizes.is_empty() || hidden_sizes.contains(&0) => {
                bad("hidden_layer_sizes must be non-empty and positive")
            }
            Self::Mlp { learning_rate, l2_alpha, .. } if !(*learning_rate >= 0.0 && *l2_alpha >= 0.0) => {
                bad("learning_rate and alpha must be >= 0")
            }
            _ => Ok(()),
        }
    }

    pub fn describe(&self) -> Hyperparams {
        let h = Hyperparams::new();
        match self {
            Self::Linear { learning_rate } => h.with("learning_rate", *learning_rate),
            Self::PassiveAggressive { c, epsilon, fit_intercept, max_iter } => h
                .with("C", *c)
                .with("epsilon", *epsilon)
                .with("fit_intercept", *fit_intercept)
                .with("max_iter", *max_iter as i64),
            Self::BoxCox { lambda, learning_rate } => h.with("lambda", *lambda).with("learning_rate", *learning_rate),
            Self::Mlp { hidden_sizes, activation, learning_rate, l2_alpha } => h
                .with("hidden_layer_sizes", hidden_sizes.iter().map(|v| *v as i64).collect::<Vec<_>>())
                .with("activation", activation.name())
                .with("learning_rate", *learning_rate)
                .with("alpha", *l2_alpha),
        }
    }
}

/// Learner-specific mutable parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum OnlineModel {
    Linear { weights: Vec<f64>, intercept: f64 },
    Mlp { network: Network },
}

/// Predict-then-learn interface used by progressive validation.
pub trait OnlineLearner {
    fn predict_one(&self, x: &[f64]) -> Result<f64, OnlineError>;
    fn learn_one(&mut self, x: &[f64], y: f64) -> Result<LearnNote, OnlineError>;

    /// Prediction with a flag for outputs clamped to the target domain.
    fn predict_flagged(&self, x: &[f64]) -> Result<OnlinePrediction, OnlineError> {
        self.predict_one(x).map(|value| OnlinePrediction { value, clamped: false })
    }
}

/// State of one online regressor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OnlineRegressorState {
    pub algorithm: OnlineAlgorithm,
    pub hyperparams: Hyperparams,
    pub n_features: usize,
    pub updates_seen: u64,
    pub model: OnlineModel,
    /// Updates skipped because no finite step existed.
    pub skipped_updates: u64,
    /// Box-Cox only: min-max scaling of transformed targets seen by the
    /// inner model.
    #[serde(default)]
    pub transformed_scaler: Option<MinMaxScaler>,
}

/// A prediction with the Box-Cox clamp flag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OnlinePrediction {
    pub value: f64,
    pub clamped: bool,
}

impl OnlineRegressorState {
    /// Zero weights for the linear family; seeded initialization for the MLP.
    pub fn new(algorithm: OnlineAlgorithm, n_features: usize, seed: u64) -> Result<Self, OnlineError> {
        algorithm.validate()?;
        let model = match &algorithm {
            OnlineAlgorithm::Mlp { hidden_sizes, activation, .. } => {
                OnlineModel::Mlp { network: Network::init(n_features, hidden_sizes, *activation, &mut seeded(seed)) }
            }
            _ => OnlineModel::Linear { weights: vec![0.0; n_features], intercept: 0.0 },
        };
        Ok(Self {
            hyperparams: algorithm.describe(),
            algorithm,
            n_features,
            updates_seen: 0,
            model,
            skipped_updates: 0,
            transformed_scaler: None,
        })
    }

    /// Sets the scaling applied to Box-Cox transformed targets.
    pub fn with_transformed_scaler(mut self, scaler: MinMaxScaler) -> Self {
        self.transformed_scaler = Some(scaler);
        self
    }

    pub fn kind(&self) -> OnlineKind {
        self.algorithm.kind()
    }

    fn check(&self, x: &[f64]) -> Result<(), OnlineError> {
        if x.len() != self.n_features {
            return Err(OnlineError::DimensionMismatch { expected: self.n_features, found: x.len() });
        }
        Ok(())
    }

    /// Output of the underlying model (transformed units for Box-Cox).
    fn raw_output(&self, x: &[f64]) -> f64 {
        match &self.model {
            OnlineModel::Linear { weights, intercept } => dot(weights, x) + intercept,
            OnlineModel::Mlp { network } => network.predict_row(x),
        }
    }

    pub fn predict_detail(&self, x: &[f64]) -> Result<OnlinePrediction, OnlineError> {
        self.check(x)?;
        let z = self.raw_output(x);
        Ok(match self.algorithm {
            OnlineAlgorithm::BoxCox { lambda, .. } => {
                let z = self.transformed_scaler.as_ref().map_or(z, |s| s.unscale(0, z));
                let (value, clamped) = boxcox_inverse_clamped(z, lambda);
                OnlinePrediction { value, clamped }
            }
            _ => OnlinePrediction { value: z, clamped: false },
        })
    }

    fn sgd_linear(weights: &mut [f64], intercept: &mut f64, x: &[f64], y: f64, eta: f64) {
        let err = dot(weights, x) + *intercept - y;
        if err == 0.0 {
            return;
        }
        for (w, xi) in weights.iter_mut().zip(x) {
            *w -= eta * err * xi;
        }
        *intercept -= eta * err;
    }

    fn try_learn(&self, x: &[f64], y: f64) -> Result<(OnlineModel, LearnNote), OnlineError> {
        let mut model = self.model.clone();
        let mut note = LearnNote::Updated;
        match (&self.algorithm, &mut model) {
            (OnlineAlgorithm::Linear { learning_rate }, OnlineModel::Linear { weights, intercept }) => {
                Self::sgd_linear(weights, intercept, x, y, *learning_rate);
            }
            (OnlineAlgorithm::BoxCox { lambda, learning_rate }, OnlineModel::Linear { weights, intercept }) => {
                let z = boxcox_transform(y, *lambda)?;
                let z = self.transformed_scaler.as_ref().map_or(z, |s| s.scale(0, z));
                Self::sgd_linear(weights, intercept, x, z, *learning_rate);
            }
            (
                OnlineAlgorithm::PassiveAggressive { c, epsilon, fit_intercept, .. },
                OnlineModel::Linear { weights, intercept },
            ) => {
                let pred = dot(weights, x) + *intercept;
                let loss = ((pred - y).abs() - epsilon).max(0.0);
                if loss == 0.0 {
                    note = LearnNote::Passive;
                } else {
                    let norm = norm_sq(x) + if *fit_intercept { 1.0 } else { 0.0 };
                    if norm == 0.0 {
                        note = LearnNote::ZeroNormInput;
                    } else {
                        let tau = c.min(loss / norm);
                        let step = (y - pred).signum() * tau;
                        for (w, xi) in weights.iter_mut().zip(x) {
                            *w += step * xi;
                        }
                        if *fit_intercept {
                            *intercept += step;
                        }
                    }
                }
            }
            (OnlineAlgorithm::Mlp { learning_rate, l2_alpha, .. }, OnlineModel::Mlp { network }) => {
                if *learning_rate > 0.0 {
                    network.sgd_step(x, y, *learning_rate, *l2_alpha);
                }
                if !network.params.iter().all(|v| v.is_finite()) || !network.predict_row(x).is_finite() {
                    return Err(OnlineError::DivergedLoss { update: self.updates_seen + 1 });
                }
            }
            _ => unreachable!("model variant always matches the algorithm"),
        }
        if let OnlineModel::Linear { weights, intercept } = &model {
            if !intercept.is_finite() || weights.iter().any(|w| !w.is_finite()) {
                return Err(OnlineError::NonFiniteUpdate { update: self.updates_seen + 1 });
            }
        }
        Ok((model, note))
    }

    pub fn to_checkpoint(
        &self,
        feature_names: Vec<String>,
        feature_scaler: Option<MinMaxScaler>,
        target_scaler: Option<MinMaxScaler>,
    ) -> OnlineCheckpoint {
        OnlineCheckpoint {
            format_version: CHECKPOINT_FORMAT_VERSION,
            code_version: crate::CODE_VERSION.to_string(),
            feature_names,
            feature_scaler,
            target_scaler,
            columns: None,
            updates_seen: self.updates_seen,
            state: self.clone(),
        }
    }
}

impl OnlineLearner for OnlineRegressorState {
    fn predict_one(&self, x: &[f64]) -> Result<f64, OnlineError> {
        self.predict_detail(x).map(|p| p.value)
    }

    fn predict_flagged(&self, x: &[f64]) -> Result<OnlinePrediction, OnlineError> {
        self.predict_detail(x)
    }

    /// On error the state is left exactly as it was.
    fn learn_one(&mut self, x: &[f64], y: f64) -> Result<LearnNote, OnlineError> {
        self.check(x)?;
        let (model, note) = self.try_learn(x, y)?;
        self.model = model;
        self.updates_seen += 1;
        if note == LearnNote::ZeroNormInput {
            self.skipped_updates += 1;
        }
        Ok(note)
    }
}

pub const CHECKPOINT_FORMAT_VERSION: u32 = 1;

/// Serialized online state; same envelope as an offline model document
/// plus the update counter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OnlineCheckpoint {
    pub format_version: u32,
    pub code_version: String,
    pub feature_names: Vec<String>,
    pub feature_scaler: Option<MinMaxScaler>,
    pub target_scaler: Option<MinMaxScaler>,
    /// Scaled columns fed to the learner; `None` keeps all of them.
    #[serde(default)]
    pub columns: Option<Vec<usize>>,
    pub updates_seen: u64,
    pub state: OnlineRegressorState,
}

impl OnlineCheckpoint {
    pub fn with_columns(mut self, columns: Vec<usize>) -> Self {
        self.columns = Some(columns);
        self
    }

    /// Predicts in target units from an unscaled feature row without
    /// learning from it.
    pub fn predict_raw(&self, row: &[f64]) -> Result<f64, OnlineError> {
        let z = match &self.feature_scaler {
            Some(s) => s
                .transform_row(row)
                .map_err(|_| OnlineError::DimensionMismatch { expected: s.width(), found: row.len() })?,
            None => row.to_vec(),
        };
        let z: Vec<f64> = match &self.columns {
            Some(cols) => cols.iter().map(|&j| z[j]).collect(),
            None => z,
        };
        let p = self.state.predict_one(&z)?;
        Ok(match &self.target_scaler {
            Some(t) => t.unscale(0, p),
            None => p,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("checkpoints always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, OnlineError> {
        let c: Self = serde_json::from_str(text).map_err(|e| OnlineError::Checkpoint(e.to_string()))?;
        if c.format_version != CHECKPOINT_FORMAT_VERSION {
            return Err(OnlineError::Checkpoint(format!("unsupported format version {}", c.format_version)));
        }
        if c.updates_seen != c.state.updates_seen {
            return Err(OnlineError::Checkpoint("update counter does not match state".into()));
        }
        Ok(c)
    }

    pub fn save(&self, path: &Path) -> Result<(), OnlineError> {
        std::fs::write(path, self.to_json()).map_err(|e| OnlineError::Checkpoint(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, OnlineError> {
        let text = std::fs::read_to_string(path).map_err(|e| OnlineError::Checkpoint(e.to_string()))?;
        Self::from_json(&text)
    }
}
