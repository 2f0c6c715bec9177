use serde::{Deserialize, Serialize};

use super::FitError;
use crate::linalg::{dot, lstsq};
use crate::Matrix;

const RANK_RTOL: f64 = 1e-10;
pub(crate) const CD_TOL: f64 = 1e-6;
pub(crate) const CD_MAX_SWEEPS: usize = 10_000;

/// `ŷ = intercept + coef · x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub intercept: f64,
    pub coef: Vec<f64>,
}

impl LinearModel {
    pub fn zeros(n_features: usize) -> Self {
        Self { intercept: 0.0, coef: vec![0.0; n_features] }
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.intercept + dot(&self.coef, row)
    }

    pub fn residual_sum_sq(&self, x: &Matrix, y: &[f64]) -> f64 {
        x.rows().zip(y).map(|(r, yi)| (yi - self.predict_row(r)).powi(2)).sum()
    }
}

/// Ordinary least squares with an intercept column.
pub fn fit_ols(x: &Matrix, y: &[f64]) -> Result<LinearModel, FitError> {
    let design = x.with_intercept();
    if design.nrows() < design.ncols() {
        return Err(FitError::InvalidParameter(format!(
            "OLS needs at least {} rows, got {}",
            design.ncols(),
            design.nrows()
        )));
    }
    let beta =
        lstsq(&design, y, RANK_RTOL).map_err(|e| FitError::SingularDesign { column: e.column.saturating_sub(1) })?;
    Ok(LinearModel { intercept: beta[0], coef: beta[1..].to_vec() })
}

struct Centered {
    x: Matrix,
    x_mean: Vec<f64>,
    y: Vec<f64>,
    y_mean: f64,
}

fn center(x: &Matrix, y: &[f64]) -> Centered {
    let n = x.nrows() as f64;
    let p = x.ncols();
    let mut x_mean = vec![0.0; p];
    for r in x.rows() {
        for (m, v) in x_mean.iter_mut().zip(r) {
            *m += v;
        }
    }
    x_mean.iter_mut().for_each(|m| *m /= n);
    let y_mean = y.iter().sum::<f64>() / n;
    let mut data = Vec::with_capacity(x.nrows() * p);
    for r in x.rows() {
        data.extend(r.iter().zip(&x_mean).map(|(v, m)| v - m));
    }
    Centered { x: Matrix::new(x.nrows(), p, data), x_mean, y: y.iter().map(|v| v - y_mean).collect(), y_mean }
}

fn uncenter(c: &Centered, coef: Vec<f64>) -> LinearModel {
    LinearModel { intercept: c.y_mean - dot(&c.x_mean, &coef), coef }
}

/// Minimizes `‖y − Xβ − b‖² + λ‖β‖²`; the intercept `b` is not penalized.
pub fn fit_ridge(x: &Matrix, y: &[f64], lambda: f64) -> Result<LinearModel, FitError> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(FitError::InvalidParameter(format!("lambda must be >= 0, got {lambda}")));
    }
    let c = center(x, y);
    let (n, p) = (x.nrows(), x.ncols());
    let extra = if lambda > 0.0 { p } else { 0 };
    let mut data = Vec::with_capacity((n + extra) * p);
    data.extend_from_slice(c.x.as_slice());
    let mut rhs = c.y.clone();
    let s = lambda.sqrt();
    for j in 0..extra {
        data.extend((0..p).map(|k| if k == j { s } else { 0.0 }));
        rhs.push(0.0);
    }
    let aug = Matrix::new(n + extra, p, data);
    if aug.nrows() < p {
        return Err(FitError::InvalidParameter(format!("ridge with lambda = 0 needs at least {p} rows")));
    }
    let coef = lstsq(&aug, &rhs, RANK_RTOL).map_err(|e| FitError::SingularDesign { column: e.column })?;
    Ok(uncenter(&c, coef))
}

fn soft_threshold(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

/// Coordinate descent on `½‖y − Xβ − b‖² + l1‖β‖₁ + ½ l2‖β‖²`.
///
/// Works on the Gram matrix of the centered design, so one sweep costs
/// O(p²). Returns the model and the number of sweeps used.
pub(crate) fn coordinate_descent(x: &Matrix, y: &[f64], l1: f64, l2: f64) -> Result<(LinearModel, usize), FitError> {
    let c = center(x, y);
    let p = x.ncols();
    let mut gram = vec![0.0; p * p];
    let mut xty = vec![0.0; p];
    for (r, yi) in c.x.rows().zip(&c.y) {
        for j in 0..p {
            xty[j] += r[j] * yi;
            let rj = r[j];
            if rj == 0.0 {
                continue;
            }
            for k in 0..p {
                gram[j * p + k] += rj * r[k];
            }
        }
    }
    let mut beta = vec![0.0; p];
    // q = Gβ, kept in sync with beta.
    let mut q = vec![0.0; p];
    let mut max_change = f64::INFINITY;
    for sweep in 1..=CD_MAX_SWEEPS {
        max_change = 0.0f64;
        for j in 0..p {
            let gjj = gram[j * p + j];
            if gjj == 0.0 {
                continue;
            }
            let rho = xty[j] - q[j] + gjj * beta[j];
            let new = soft_threshold(rho, l1) / (gjj + l2);
            let delta = new - beta[j];
            if delta != 0.0 {
                beta[j] = new;
                let col = &gram[j * p..(j + 1) * p];
                for (qk, g) in q.iter_mut().zip(col) {
                    *qk += delta * g;
                }
                max_change = max_change.max(delta.abs());
            }
        }
        if !max_change.is_finite() {
            break;
        }
        if max_change < CD_TOL {
            return Ok((uncenter(&c, beta), sweep));
        }
    }
    Err(FitError::NoConvergence { sweeps: CD_MAX_SWEEPS, max_change })
}

fn check_lambda(lambda: f64) -> Result<(), FitError> {
    if lambda >= 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(FitError::InvalidParameter(format!("lambda must be >= 0, got {lambda}")))
    }
}

/// Minimizes `‖y − Xβ − b‖² + λ‖β‖₁`.
pub fn fit_lasso(x: &Matrix, y: &[f64], lambda: f64) -> Result<(LinearModel, usize), FitError> {
    check_lambda(lambda)?;
    coordinate_descent(x, y, lambda / 2.0, 0.0)
}

/// Minimizes `‖y − Xβ − b‖²/(2n) + λ((1−α)/2 ‖β‖² + α‖β‖₁)`.
///
/// With this scaling `α = 1` matches [`fit_lasso`] at `2nλ` and `α = 0`
/// matches [`fit_ridge`] at `nλ`.
pub fn fit_elastic_net(x: &Matrix, y: &[f64], lambda: f64, alpha: f64) -> Result<(LinearModel, usize), FitError> {
    check_lambda(lambda)?;
    if !(0.0..=1.0).contains(&alpha) {
        return Err(FitError::InvalidParameter(format!("l1_ratio must lie in [0, 1], got {alpha}")));
    }
    let n = x.nrows() as f64;
    coordinate_descent(x, y, n * lambda * alpha, n * lambda * (1.0 - alpha))
}

pub fn lasso_objective(x: &Matrix, y: &[f64], m: &LinearModel, lambda: f64) -> f64 {
    m.residual_sum_sq(x, y) + lambda * m.coef.iter().map(|b| b.abs()).sum::<f64>()
}

pub fn enet_objective(x: &Matrix, y: &[f64], m: &LinearModel, lambda: f64, alpha: f64) -> f64 {
    let n = x.nrows() as f64;
    let l1: f64 = m.coef.iter().map(|b| b.abs()).sum();
    let l2: f64 = m.coef.iter().map(|b| b * b).sum();
    m.residual_sum_sq(x, y) / (2.0 * n) + lambda * ((1.0 - alpha) / 2.0 * l2 + alpha * l1)
}
