use rand::Rng;
use serde::{Deserialize, Serialize};

use super::tree::fit_tree_on;
use super::{FitError, FitWarning, SplitMode, Tree, TreeParams};
use crate::rng::{member_seed, seeded};
use crate::Matrix;

/// Averaging ensemble of trees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<Tree>,
}

impl ForestModel {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.predict_row(row)).sum::<f64>() / self.trees.len() as f64
    }
}

fn check_estimators(n: usize) -> Result<(), FitError> {
    if n == 0 {
        return Err(FitError::InvalidParameter("n_estimators must be >= 1".into()));
    }
    Ok(())
}

/// Bootstrap-aggregated exhaustive-split trees with feature bagging.
///
/// Unless set, each split considers `max(1, p / 3)` features.
pub fn fit_random_forest(
    x: &Matrix,
    y: &[f64],
    n_estimators: usize,
    tree: &TreeParams,
    seed: u64,
) -> Result<ForestModel, FitError> {
    check_estimators(n_estimators)?;
    let n = x.nrows();
    let params = TreeParams {
        split_mode: SplitMode::Exhaustive,
        features_per_split: tree.features_per_split.or(Some((x.ncols() / 3).max(1))),
        ..tree.clone()
    };
    let trees = (0..n_estimators)
        .map(|i| {
            let mut rng = seeded(member_seed(seed, i));
            let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            fit_tree_on(x, y, idx, &params, &mut rng)
        })
        .collect::<Result<_, _>>()?;
    Ok(ForestModel { trees })
}

/// Random-split trees, each grown on the full sample.
pub fn fit_extra_trees(
    x: &Matrix,
    y: &[f64],
    n_estimators: usize,
    tree: &TreeParams,
    seed: u64,
) -> Result<ForestModel, FitError> {
    check_estimators(n_estimators)?;
    let params = TreeParams { split_mode: SplitMode::Random, ..tree.clone() };
    let trees = (0..n_estimators)
        .map(|i| {
            let idx: Vec<usize> = (0..x.nrows()).collect();
            fit_tree_on(x, y, idx, &params, &mut seeded(member_seed(seed, i)))
        })
        .collect::<Result<_, _>>()?;
    Ok(ForestModel { trees })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostStage {
    pub tree: Tree,
    pub weight: f64,
}

/// AdaBoost.R2 with linear loss.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaBoostModel {
    pub stages: Vec<BoostStage>,
    /// Weighted average loss of each kept stage.
    pub stage_loss: Vec<f64>,
    pub warning: Option<FitWarning>,
}

impl AdaBoostModel {
    /// Weighted median of the stage predictions.
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut preds: Vec<(f64, f64)> = self.stages.iter().map(|s| (s.tree.predict_row(row), s.weight)).collect();
        preds.sort_by(|a, b| a.0.total_cmp(&b.0));
        let half = preds.iter().map(|p| p.1).sum::<f64>() / 2.0;
        let mut acc = 0.0;
        for (p, w) in &preds {
            acc += w;
            if acc >= half {
                return *p;
            }
        }
        preds[preds.len() - 1].0
    }
}

/// AdaBoost.R2. The first stage is grown on the full sample; later stages
/// on weighted resamples. Stops early on a perfect stage or when the
/// average loss reaches 0.5 (a degenerate first stage is kept with a
/// warning).
pub fn fit_adaboost(
    x: &Matrix,
    y: &[f64],
    n_estimators: usize,
    base: &TreeParams,
    seed: u64,
) -> Result<AdaBoostModel, FitError> {
    check_estimators(n_estimators)?;
    let n = x.nrows();
    let mut rng = seeded(seed);
    let mut w = vec![1.0 / n as f64; n];
    let mut model = AdaBoostModel { stages: Vec::new(), stage_loss: Vec::new(), warning: None };

    for m in 0..n_estimators {
        let idx: Vec<usize> = if m == 0 {
            (0..n).collect()
        } else {
            let mut cum = Vec::with_capacity(n);
            let mut acc = 0.0;
            for wi in &w {
                acc += wi;
                cum.push(acc);
            }
            (0..n)
                .map(|_| {
                    let u = rng.random::<f64>() * acc;
                    cum.partition_point(|c| *c <= u).min(n - 1)
                })
                .collect()
        };
        let tree = fit_tree_on(x, y, idx, base, &mut rng)?;
        let err: Vec<f64> = x.rows().zip(y).map(|(r, yi)| (yi - tree.predict_row(r)).abs()).collect();
        let max_err = err.iter().fold(0.0f64, |a, e| a.max(*e));
        if max_err == 0.0 {
            model.stages.push(BoostStage { tree, weight: 1.0 });
            model.stage_loss.push(0.0);
            break;
        }
        let total_w: f64 = w.iter().sum();
        let avg: f64 = err.iter().zip(&w).map(|(e, wi)| wi * e / max_err).sum::<f64>() / total_w;
        if avg >= 0.5 {
            if m == 0 {
                model.stages.push(BoostStage { tree, weight: 1.0 });
                model.stage_loss.push(avg);
                model.warning = Some(FitWarning::DegenerateStage { average_loss: avg });
            }
            break;
        }
        let beta = avg / (1.0 - avg);
        for (wi, e) in w.iter_mut().zip(&err) {
            *wi *= beta.powf(1.0 - e / max_err);
        }
        let s: f64 = w.iter().sum();
        w.iter_mut().for_each(|wi| *wi /= s);
        model.stages.push(BoostStage { tree, weight: (1.0 / beta).ln() });
        model.stage_loss.push(avg);
    }
    Ok(model)
}

/// Squared-loss gradient boosting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientBoostingModel {
    pub init: f64,
    pub learning_rate: f64,
    pub trees: Vec<Tree>,
    /// Training MSE after each stage.
    pub train_mse: Vec<f64>,
}

impl GradientBoostingModel {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.trees.iter().fold(self.init, |f, t| f + self.learning_rate * t.predict_row(row))
    }
}

pub fn fit_gradient_boosting(
    x: &Matrix,
    y: &[f64],
    n_estimators: usize,
    learning_rate: f64,
    base: &TreeParams,
    seed: u64,
) -> Result<GradientBoostingModel, FitError> {
    check_estimators(n_estimators)?;
    if !(learning_rate > 0.0 && learning_rate.is_finite()) {
        return Err(FitError::InvalidParameter(format!("learning_rate must be > 0, got {learning_rate}")));
    }
    let n = x.nrows();
    let init = y.iter().sum::<f64>() / n as f64;
    let mut f = vec![init; n];
    let mut rng = seeded(seed);
    let mut trees = Vec::with_capacity(n_estimators);
    let mut train_mse = Vec::with_capacity(n_estimators);
    for _ in 0..n_estimators {
        let resid: Vec<f64> = y.iter().zip(&f).map(|(a, b)| a - b).collect();
        let tree = fit_tree_on(x, &resid, (0..n).collect(), base, &mut rng)?;
        for (fi, r) in f.iter_mut().zip(x.rows()) {
            *fi += learning_rate * tree.predict_row(r);
        }
        train_mse.push(y.iter().zip(&f).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / n as f64);
        trees.push(tree);
    }
    Ok(GradientBoostingModel { init, learning_rate, trees, train_mse })
}
