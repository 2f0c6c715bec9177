use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{FitError, LinearModel};
use crate::rng::seeded;
use crate::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvrParams {
    /// Weight of the ε-insensitive loss against the flatness term.
    pub c: f64,
    /// Half-width of the loss-free tube.
    pub epsilon: f64,
    pub epochs: usize,
    /// Initial step; epoch `e` uses `learning_rate / sqrt(1 + e)`.
    pub learning_rate: f64,
    /// Epochs without a new best objective before stopping.
    pub patience: usize,
}

impl Default for SvrParams {
    fn default() -> Self {
        Self { c: 1.0, epsilon: 0.1, epochs: 200, learning_rate: 0.01, patience: 50 }
    }
}

/// Linear-kernel support vector regression.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvrModel {
    pub linear: LinearModel,
    /// Objective of the returned weights.
    pub objective: f64,
    /// Stopped early because the objective stopped improving.
    pub stalled: bool,
}

/// `½‖ω‖² + C Σ max(0, |ωᵀx + b − y| − ε)`.
pub fn svr_objective(x: &Matrix, y: &[f64], m: &LinearModel, c: f64, epsilon: f64) -> f64 {
    let hinge: f64 = x.rows().zip(y).map(|(r, yi)| ((m.predict_row(r) - yi).abs() - epsilon).max(0.0)).sum();
    0.5 * m.coef.iter().map(|w| w * w).sum::<f64>() + c * hinge
}

/// Epoch-shuffled stochastic subgradient descent, keeping the best iterate.
pub fn fit_linear_svr(x: &Matrix, y: &[f64], p: &SvrParams, seed: u64) -> Result<SvrModel, FitError> {
    if !(p.c > 0.0 && p.c.is_finite()) {
        return Err(FitError::InvalidParameter(format!("C must be > 0, got {}", p.c)));
    }
    if !(p.epsilon >= 0.0 && p.epsilon.is_finite()) {
        return Err(FitError::InvalidParameter(format!("epsilon must be >= 0, got {}", p.epsilon)));
    }
    if !(p.learning_rate > 0.0 && p.learning_rate.is_finite()) {
        return Err(FitError::InvalidParameter("learning_rate must be > 0".into()));
    }
    let n = x.nrows();
    let mut rng = seeded(seed);
    let mut m = LinearModel::zeros(x.ncols());
    let mut best = m.clone();
    let mut best_obj = svr_objective(x, y, &m, p.c, p.epsilon);
    let mut since_best = 0;
    let mut stalled = false;
    let mut order: Vec<usize> = (0..n).collect();
    let shrink = 1.0 / n as f64;

    for epoch in 0..p.epochs {
        order.shuffle(&mut rng);
        let eta = p.learning_rate / ((1 + epoch) as f64).sqrt();
        for &i in &order {
            let row = x.row(i);
            let resid = m.predict_row(row) - y[i];
            let s = if resid > p.epsilon {
                1.0
            } else if resid < -p.epsilon {
                -1.0
            } else {
                0.0
            };
            for (w, xi) in m.coef.iter_mut().zip(row) {
                *w -= eta * (shrink * *w + p.c * s * xi);
            }
            m.intercept -= eta * p.c * s;
        }
        let obj = svr_objective(x, y, &m, p.c, p.epsilon);
        if !obj.is_finite() {
            return Err(FitError::DivergedLoss { epoch, loss: obj });
        }
        if obj < best_obj {
            best_obj = obj;
            best = m.clone();
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= p.patience {
                stalled = true;
                break;
            }
        }
    }
    Ok(SvrModel { linear: best, objective: best_obj, stalled })
}
