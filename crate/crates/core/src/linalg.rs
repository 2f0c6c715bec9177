//! Minimal dense linear algebra: a row-major matrix and a Householder QR
//! least-squares solver with rank detection.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    nrows: usize,
    ncols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(nrows: usize, ncols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), nrows * ncols, "matrix data length mismatch");
        Self { nrows, ncols, data }
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self::new(nrows, ncols, vec![0.0; nrows * ncols])
    }

    /// Builds a matrix from equal-length rows. An empty slice gives a 0×`ncols` matrix.
    pub fn from_rows(rows: &[Vec<f64>], ncols: usize) -> Self {
        let mut data = Vec::with_capacity(rows.len() * ncols);
        for r in rows {
            assert_eq!(r.len(), ncols, "ragged rows");
            data.extend_from_slice(r);
        }
        Self::new(rows.len(), ncols, data)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.ncols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.ncols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.ncols..(i + 1) * self.ncols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.ncols..(i + 1) * self.ncols]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        (0..self.nrows).map(move |i| self.row(i))
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.nrows).map(|i| self.get(i, j)).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn select_rows(&self, idx: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(idx.len() * self.ncols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Matrix::new(idx.len(), self.ncols, data)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Prepends a column of ones.
    pub fn with_intercept(&self) -> Matrix {
        let mut data = Vec::with_capacity(self.nrows * (self.ncols + 1));
        for r in self.rows() {
            data.push(1.0);
            data.extend_from_slice(r);
        }
        Matrix::new(self.nrows, self.ncols + 1, data)
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm_sq(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankDeficient {
    pub column: usize,
}

/// Solves `min ‖A x − b‖²` by Householder QR.
///
/// Returns [`RankDeficient`] if a diagonal entry of R falls below
/// `rtol · max|R_ii|` (or the system is underdetermined).
pub fn lstsq(a: &Matrix, b: &[f64], rtol: f64) -> Result<Vec<f64>, RankDeficient> {
    let m = a.nrows();
    let n = a.ncols();
    assert_eq!(b.len(), m);
    if m < n {
        return Err(RankDeficient { column: m });
    }
    // Column-major working copy.
    let mut q: Vec<Vec<f64>> = (0..n).map(|j| a.column(j)).collect();
    let mut rhs = b.to_vec();
    let mut diag = vec![0.0; n];

    for k in 0..n {
        let col = &q[k];
        let alpha_norm = col[k..].iter().map(|v| v * v).sum::<f64>().sqrt();
        if alpha_norm == 0.0 {
            diag[k] = 0.0;
            continue;
        }
        let alpha = if col[k] > 0.0 { -alpha_norm } else { alpha_norm };
        let mut v: Vec<f64> = col[k..].to_vec();
        v[0] -= alpha;
        let vnorm_sq = norm_sq(&v);
        diag[k] = alpha;
        if vnorm_sq == 0.0 {
            continue;
        }
        for col in q.iter_mut().skip(k) {
            let s = 2.0 * dot(&v, &col[k..]) / vnorm_sq;
            for (c, vi) in col[k..].iter_mut().zip(&v) {
                *c -= s * vi;
            }
        }
        let s = 2.0 * dot(&v, &rhs[k..]) / vnorm_sq;
        for (c, vi) in rhs[k..].iter_mut().zip(&v) {
            *c -= s * vi;
        }
    }

    let max_diag = diag.iter().fold(0.0f64, |acc, d| acc.max(d.abs()));
    for (k, d) in diag.iter().enumerate() {
        if d.abs() <= rtol * max_diag || max_diag == 0.0 {
            return Err(RankDeficient { column: k });
        }
    }
    // Back substitution with R[i][j] = q[j][i].
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = rhs[i];
        for j in i + 1..n {
            s -= q[j][i] * x[j];
        }
        x[i] = s / q[i][i];
    }
    Ok(x)
}

/// Greedy maximal set of linearly independent columns, scanned in order
/// after an implicit intercept column. A column is dropped when its
/// residual after projecting onto the kept ones (and the intercept) is at
/// most `rtol` times its own norm.
pub fn independent_columns(a: &Matrix, rtol: f64) -> Vec<usize> {
    let m = a.nrows();
    if m == 0 {
        return Vec::new();
    }
    let mut basis: Vec<Vec<f64>> = vec![vec![1.0 / (m as f64).sqrt(); m]];
    let mut kept = Vec::new();
    for j in 0..a.ncols() {
        let mut v = a.column(j);
        let scale = norm_sq(&v).sqrt();
        if scale == 0.0 {
            continue;
        }
        // Two passes of modified Gram-Schmidt keep the projection accurate.
        for _ in 0..2 {
            for q in &basis {
                let c = dot(q, &v);
                v.iter_mut().zip(q).for_each(|(vi, qi)| *vi -= c * qi);
            }
        }
        let r = norm_sq(&v).sqrt();
        if r > rtol * scale {
            v.iter_mut().for_each(|vi| *vi /= r);
            basis.push(v);
            kept.push(j);
        }
    }
    kept
}
