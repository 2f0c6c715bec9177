//! Batch-trained regressors behind a single fit/predict interface.
//!
//! [`Algorithm`] is a configured, unfitted learner; [`Algorithm::fit`]
//! produces an immutable [`RegressorModel`] whose state is one of the
//! algorithm-specific [`FittedState`] variants.

mod document;
mod ensemble;
mod knn;
mod linear;
pub mod mlp;
mod params;
mod svr;
pub mod tree;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use document::{ModelDocument, ModelIoError, MODEL_FORMAT_VERSION};
pub use ensemble::{
    fit_adaboost, fit_extra_trees, fit_gradient_boosting, fit_random_forest, AdaBoostModel, BoostStage, ForestModel,
    GradientBoostingModel,
};
pub use knn::{fit_knn, KnnModel};
pub use linear::{enet_objective, fit_elastic_net, fit_lasso, fit_ols, fit_ridge, lasso_objective, LinearModel};
pub use mlp::{fit_mlp, Activation, MlpParams, Network};
pub use params::{HyperparamGrid, Hyperparams, ParamValue};
pub use svr::{fit_linear_svr, svr_objective, SvrModel, SvrParams};
pub use tree::{fit_tree, SplitMode, Tree, TreeParams};

use crate::Matrix;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("design matrix is rank deficient (column {column})")]
    SingularDesign { column: usize },
    #[error("no convergence after {sweeps} sweeps (last max coefficient change {max_change:e})")]
    NoConvergence { sweeps: usize, max_change: f64 },
    #[error("k = {k} exceeds the {n} training rows")]
    KTooLarge { k: usize, n: usize },
    #[error("loss diverged at epoch {epoch} (loss {loss})")]
    DivergedLoss { epoch: usize, loss: f64 },
    #[error("dimension mismatch: model expects {expected} features, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("unsupported kernel `{0}` (only the linear kernel is implemented)")]
    UnsupportedKernel(String),
    #[error("unknown algorithm `{0}`")]
    UnknownAlgorithm(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("training data is empty")]
    EmptyTrainingSet,
    #[error("training data contains non-finite values")]
    NonFinite,
}

/// Non-fatal conditions recorded during a fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FitWarning {
    /// The first boosting stage already had average loss ≥ 0.5.
    DegenerateStage { average_loss: f64 },
    /// The objective stopped improving; the best iterate was kept.
    NoImprovement { epochs: usize },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    pub iterations: Option<usize>,
    pub objective: Option<f64>,
    /// Per-stage or per-epoch trace where the algorithm records one.
    pub trace: Vec<f64>,
    pub warnings: Vec<FitWarning>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlgorithmKind {
    Ols,
    Ridge,
    Lasso,
    ElasticNet,
    Knn,
    Tree,
    RandomForest,
    ExtraTrees,
    AdaBoost,
    GradientBoosting,
    Svr,
    Mlp,
}

impl AlgorithmKind {
    pub const ALL: [AlgorithmKind; 12] = [
        Self::Ols,
        Self::Ridge,
        Self::Lasso,
        Self::ElasticNet,
        Self::Knn,
        Self::Tree,
        Self::RandomForest,
        Self::ExtraTrees,
        Self::AdaBoost,
        Self::GradientBoosting,
        Self::Svr,
        Self::Mlp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Ols => "ols",
            Self::Ridge => "ridge",
            Self::Lasso => "lasso",
            Self::ElasticNet => "elastic_net",
            Self::Knn => "knn",
            Self::Tree => "tree",
            Self::RandomForest => "random_forest",
            Self::ExtraTrees => "extra_trees",
            Self::AdaBoost => "adaboost",
            Self::GradientBoosting => "gradient_boosting",
            Self::Svr => "svr",
            Self::Mlp => "mlp",
        }
    }
}

impl fmt::Display for AlgorithmKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AlgorithmKind {
    type Err = FitError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| FitError::UnknownAlgorithm(s.to_string()))
    }
}

/// A configured learner.
#[derive(Debug, Clone, PartialEq)]
pub enum Algorithm {
    Ols,
    Ridge { lambda: f64 },
    Lasso { lambda: f64 },
    ElasticNet { lambda: f64, alpha: f64 },
    Knn { k: usize },
    Tree(TreeParams),
    RandomForest { n_estimators: usize, tree: TreeParams },
    ExtraTrees { n_estimators: usize, tree: TreeParams },
    AdaBoost { n_estimators: usize, base: TreeParams },
    GradientBoosting { n_estimators: usize, learning_rate: f64, base: TreeParams },
    Svr(SvrParams),
    Mlp(MlpParams),
}

impl Algorithm {
    pub fn kind(&self) -> AlgorithmKind {
        match self {
            Self::Ols => AlgorithmKind::Ols,
            Self::Ridge { .. } => AlgorithmKind::Ridge,
            Self::Lasso { .. } => AlgorithmKind::Lasso,
            Self::ElasticNet { .. } => AlgorithmKind::ElasticNet,
            Self::Knn { .. } => AlgorithmKind::Knn,
            Self::Tree(_) => AlgorithmKind::Tree,
            Self::RandomForest { .. } => AlgorithmKind::RandomForest,
            Self::ExtraTrees { .. } => AlgorithmKind::ExtraTrees,
            Self::AdaBoost { .. } => AlgorithmKind::AdaBoost,
            Self::GradientBoosting { .. } => AlgorithmKind::GradientBoosting,
            Self::Svr(_) => AlgorithmKind::Svr,
            Self::Mlp(_) => AlgorithmKind::Mlp,
        }
    }

    /// Builds a learner from named hyperparameters; unspecified ones take
    /// their defaults. Unknown names are rejected.
    pub fn from_params(kind: AlgorithmKind, p: &Hyperparams) -> Result<Self, FitError> {
        params::build(kind, p)
    }

    pub fn fit(&self, x: &Matrix, y: &[f64], seed: u64) -> Result<RegressorModel, FitError> {
        check_training(x, y)?;
        let mut diagnostics = FitDiagnostics::default();
        let state = match self {
            Self::Ols => FittedState::Linear(fit_ols(x, y)?),
            Self::Ridge { lambda } => FittedState::Linear(fit_ridge(x, y, *lambda)?),
            Self::Lasso { lambda } => {
                let (m, sweeps) = fit_lasso(x, y, *lambda)?;
                diagnostics.iterations = Some(sweeps);
                FittedState::Linear(m)
            }
            Self::ElasticNet { lambda, alpha } => {
                let (m, sweeps) = fit_elastic_net(x, y, *lambda, *alpha)?;
                diagnostics.iterations = Some(sweeps);
                FittedState::Linear(m)
            }
            Self::Knn { k } => FittedState::Knn(fit_knn(x, y, *k)?),
            Self::Tree(p) => FittedState::Tree(fit_tree(x, y, p, seed)?),
            Self::RandomForest { n_estimators, tree } => {
                FittedState::Forest(fit_random_forest(x, y, *n_estimators, tree, seed)?)
            }
            Self::ExtraTrees { n_estimators, tree } => {
                FittedState::Forest(fit_extra_trees(x, y, *n_estimators, tree, seed)?)
            }
            Self::AdaBoost { n_estimators, base } => {
                let m = fit_adaboost(x, y, *n_estimators, base, seed)?;
                if let Some(w) = m.warning.clone() {
                    diagnostics.warnings.push(w);
                }
                diagnostics.iterations = Some(m.stages.len());
                FittedState::AdaBoost(m)
            }
            Self::GradientBoosting { n_estimators, learning_rate, base } => {
                let m = fit_gradient_boosting(x, y, *n_estimators, *learning_rate, base, seed)?;
                diagnostics.trace = m.train_mse.clone();
                FittedState::GradientBoosting(m)
            }
            Self::Svr(p) => {
                let m = fit_linear_svr(x, y, p, seed)?;
                diagnostics.objective = Some(m.objective);
                if m.stalled {
                    diagnostics.warnings.push(FitWarning::NoImprovement { epochs: p.patience });
                }
                FittedState::Svr(m)
            }
            Self::Mlp(p) => {
                let (net, losses) = fit_mlp(x, y, p, seed)?;
                diagnostics.objective = losses.last().copied();
                diagnostics.trace = losses;
                FittedState::Mlp(net)
            }
        };
        Ok(RegressorModel {
            kind: self.kind(),
            hyperparams: params::describe(self),
            n_features: x.ncols(),
            state,
            diagnostics,
        })
    }
}

fn check_training(x: &Matrix, y: &[f64]) -> Result<(), FitError> {
    if x.nrows() == 0 {
        return Err(FitError::EmptyTrainingSet);
    }
    if x.nrows() != y.len() {
        return Err(FitError::DimensionMismatch { expected: x.nrows(), found: y.len() });
    }
    if !x.is_finite() || y.iter().any(|v| !v.is_finite()) {
        return Err(FitError::NonFinite);
    }
    Ok(())
}

/// Algorithm-specific fitted parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum FittedState {
    Linear(LinearModel),
    Knn(KnnModel),
    Tree(Tree),
    Forest(ForestModel),
    AdaBoost(AdaBoostModel),
    GradientBoosting(GradientBoostingModel),
    Svr(SvrModel),
    Mlp(Network),
}

/// A fitted, immutable regressor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressorModel {
    pub kind: AlgorithmKind,
    pub hyperparams: Hyperparams,
    pub n_features: usize,
    pub state: FittedState,
    pub diagnostics: FitDiagnostics,
}

impl RegressorModel {
    pub fn predict_row(&self, row: &[f64]) -> Result<f64, FitError> {
        if row.len() != self.n_features {
            return Err(FitError::DimensionMismatch { expected: self.n_features, found: row.len() });
        }
        Ok(match &self.state {
            FittedState::Linear(m) => m.predict_row(row),
            FittedState::Knn(m) => m.predict_row(row),
            FittedState::Tree(t) => t.predict_row(row),
            FittedState::Forest(f) => f.predict_row(row),
            FittedState::AdaBoost(m) => m.predict_row(row),
            FittedState::GradientBoosting(m) => m.predict_row(row),
            FittedState::Svr(m) => m.linear.predict_row(row),
            FittedState::Mlp(n) => n.predict_row(row),
        })
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<f64>, FitError> {
        if x.nrows() > 0 && x.ncols() != self.n_features {
            return Err(FitError::DimensionMismatch { expected: self.n_features, found: x.ncols() });
        }
        x.rows().map(|r| self.predict_row(r)).collect()
    }
}
