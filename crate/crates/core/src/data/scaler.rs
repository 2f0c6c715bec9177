use serde::{Deserialize, Serialize};

use super::DataError;
use crate::Matrix;

/// Per-column min-max scaling onto `[-1, 1]`.
///
/// Columns that were constant at fit time map to 0. Values outside the
/// fitted range are extrapolated linearly, never clipped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinMaxScaler {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl MinMaxScaler {
    pub fn fit(x: &Matrix) -> Result<Self, DataError> {
        if x.nrows() == 0 {
            return Err(DataError::EmptySeries);
        }
        let mut min = vec![f64::INFINITY; x.ncols()];
        let mut max = vec![f64::NEG_INFINITY; x.ncols()];
        for row in x.rows() {
            for (j, &v) in row.iter().enumerate() {
                min[j] = min[j].min(v);
                max[j] = max[j].max(v);
            }
        }
        Ok(Self { min, max })
    }

    /// Scaler for a single column of values (used for targets).
    pub fn fit_values(values: &[f64]) -> Result<Self, DataError> {
        Self::fit(&Matrix::new(values.len(), 1, values.to_vec()))
    }

    pub fn width(&self) -> usize {
        self.min.len()
    }

    #[inline]
    pub fn scale(&self, j: usize, v: f64) -> f64 {
        let (lo, hi) = (self.min[j], self.max[j]);
        if hi > lo {
            2.0 * (v - lo) / (hi - lo) - 1.0
        } else {
            0.0
        }
    }

    #[inline]
    pub fn unscale(&self, j: usize, z: f64) -> f64 {
        let (lo, hi) = (self.min[j], self.max[j]);
        if hi > lo {
            (z + 1.0) * 0.5 * (hi - lo) + lo
        } else {
            lo
        }
    }

    fn check(&self, found: usize) -> Result<(), DataError> {
        if found != self.width() {
            return Err(DataError::DimensionMismatch { expected: self.width(), found });
        }
        Ok(())
    }

    pub fn transform(&self, x: &Matrix) -> Result<Matrix, DataError> {
        self.check(x.ncols())?;
        let mut out = x.clone();
        for i in 0..out.nrows() {
            for (j, v) in out.row_mut(i).iter_mut().enumerate() {
                *v = self.scale(j, *v);
            }
        }
        Ok(out)
    }

    pub fn inverse_transform(&self, z: &Matrix) -> Result<Matrix, DataError> {
        self.check(z.ncols())?;
        let mut out = z.clone();
        for i in 0..out.nrows() {
            for (j, v) in out.row_mut(i).iter_mut().enumerate() {
                *v = self.unscale(j, *v);
            }
        }
        Ok(out)
    }

    pub fn transform_row(&self, row: &[f64]) -> Result<Vec<f64>, DataError> {
        self.check(row.len())?;
        Ok(row.iter().enumerate().map(|(j, &v)| self.scale(j, v)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn col(v: &[f64]) -> Matrix {
        Matrix::new(v.len(), 1, v.to_vec())
    }

    #[test]
    fn endpoints_constant_and_extrapolation() {
        let s = MinMaxScaler::fit(&col(&[0.0, 5.0, 10.0])).unwrap();
        assert_eq!(s.transform(&col(&[0.0, 5.0, 10.0])).unwrap().as_slice(), &[-1.0, 0.0, 1.0]);
        assert!((s.scale(0, 12.0) - 1.4).abs() < 1e-15);
        let c = MinMaxScaler::fit(&col(&[7.0, 7.0, 7.0])).unwrap();
        assert_eq!(c.transform(&col(&[7.0, 7.0, 7.0])).unwrap().as_slice(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn width_mismatch() {
        let s = MinMaxScaler::fit(&col(&[0.0, 1.0])).unwrap();
        let two = Matrix::new(1, 2, vec![0.0, 1.0]);
        assert!(matches!(s.transform(&two), Err(DataError::DimensionMismatch { expected: 1, found: 2 })));
    }

    proptest! {
        #[test]
        fn round_trip_on_training_data(
            rows in prop::collection::vec(prop::collection::vec(-1e6f64..1e6, 3), 2..40)
        ) {
            let x = Matrix::from_rows(&rows, 3);
            let s = MinMaxScaler::fit(&x).unwrap();
            let z = s.transform(&x).unwrap();
            for v in z.as_slice() {
                prop_assert!(*v >= -1.0 - 1e-12 && *v <= 1.0 + 1e-12);
            }
            let back = s.inverse_transform(&z).unwrap();
            for j in 0..3 {
                if s.max[j] > s.min[j] {
                    for i in 0..x.nrows() {
                        let (a, b) = (x.get(i, j), back.get(i, j));
                        let scale = a.abs().max(s.max[j] - s.min[j]);
                        prop_assert!((a - b).abs() <= 1e-9 * scale, "{a} vs {b}");
                    }
                }
            }
        }
    }
}
