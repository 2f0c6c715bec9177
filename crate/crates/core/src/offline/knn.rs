use serde::{Deserialize, Serialize};

use super::FitError;
use crate::Matrix;

/// Stores the training rows; predicts the mean target of the `k` nearest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub k: usize,
    pub x: Matrix,
    pub y: Vec<f64>,
}

pub fn fit_knn(x: &Matrix, y: &[f64], k: usize) -> Result<KnnModel, FitError> {
    if k == 0 {
        return Err(FitError::InvalidParameter("n_neighbors must be >= 1".into()));
    }
    if k > x.nrows() {
        return Err(FitError::KTooLarge { k, n: x.nrows() });
    }
    Ok(KnnModel { k, x: x.clone(), y: y.to_vec() })
}

impl KnnModel {
    /// Training-row indices of the `k` nearest neighbours of `row`, closest
    /// first; equal distances go to the lower index.
    pub fn neighbours(&self, row: &[f64]) -> Vec<usize> {
        let mut d: Vec<(f64, usize)> = self
            .x
            .rows()
            .enumerate()
            .map(|(i, r)| (r.iter().zip(row).map(|(a, b)| (a - b) * (a - b)).sum(), i))
            .collect();
        let by = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if self.k < d.len() {
            d.select_nth_unstable_by(self.k - 1, by);
            d.truncate(self.k);
        }
        d.sort_by(by);
        d.into_iter().map(|(_, i)| i).collect()
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let idx = self.neighbours(row);
        idx.iter().map(|&i| self.y[i]).sum::<f64>() / idx.len() as f64
    }
}
