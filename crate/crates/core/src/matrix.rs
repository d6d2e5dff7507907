//! Row-major dense matrices and the basic operations on them.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng::RngSeed;

/// Row-major real matrix. Entries are always finite.
///
/// Zero-sized shapes are allowed so that a basis with no surviving columns
/// (e.g. the range of the zero matrix) is representable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{rows}x{cols} matrix needs {} values, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: pos / cols.max(1), col: pos % cols.max(1) });
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    /// Builds from row vectors; all rows must have equal length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        DenseMatrix::new(rows.len(), cols, rows.concat())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        Self::diag(&vec![1.0; n])
    }

    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        let mut m = Self::zeros(n, n);
        for (i, &v) in values.iter().enumerate() {
            m.data[i * n + i] = v;
        }
        m
    }

    /// Builds from a closure over `(row, col)`.
    ///
    /// Panics if the closure produces a non-finite value.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self::from_raw(rows, cols, data)
    }

    /// Columns given as vectors of length `rows`.
    pub fn from_columns(rows: usize, columns: &[Vec<f64>]) -> Self {
        let cols = columns.len();
        let mut data = vec![0.0; rows * cols];
        for (j, c) in columns.iter().enumerate() {
            assert_eq!(c.len(), rows);
            for (i, &v) in c.iter().enumerate() {
                data[i * cols + j] = v;
            }
        }
        Self::from_raw(rows, cols, data)
    }

    pub(crate) fn from_raw(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        assert!(data.iter().all(|v| v.is_finite()), "non-finite matrix entry");
        DenseMatrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn columns(&self) -> Vec<Vec<f64>> {
        (0..self.cols).map(|j| self.column(j)).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0.0)
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut data = vec![0.0; self.data.len()];
        for i in 0..self.rows {
            for j in 0..self.cols {
                data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        DenseMatrix { rows: self.cols, cols: self.rows, data }
    }

    /// `self · other`. Each output row is reduced sequentially, rows run in parallel.
    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let n = other.cols;
        let mut data = vec![0.0; self.rows * n];
        if n > 0 {
            data.par_chunks_mut(n).enumerate().for_each(|(i, out)| {
                for (l, &a) in self.row(i).iter().enumerate() {
                    if a != 0.0 {
                        axpy(a, other.row(l), out);
                    }
                }
            });
        }
        Ok(DenseMatrix { rows: self.rows, cols: n, data })
    }

    /// `selfᵀ · other` without forming the transpose.
    pub fn t_matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.rows != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply ({}x{})^T by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let n = other.cols;
        let mut data = vec![0.0; self.cols * n];
        if n > 0 {
            data.par_chunks_mut(n).enumerate().for_each(|(j, out)| {
                for l in 0..self.rows {
                    let a = self.get(l, j);
                    if a != 0.0 {
                        axpy(a, other.row(l), out);
                    }
                }
            });
        }
        Ok(DenseMatrix { rows: self.cols, cols: n, data })
    }

    pub fn add(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(&self, other: &DenseMatrix, f: impl Fn(f64, f64) -> f64) -> Result<DenseMatrix> {
        if self.shape() != other.shape() {
            return Err(Error::DimensionMismatch(format!(
                "shapes {:?} and {:?} differ",
                self.shape(),
                other.shape()
            )));
        }
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self::from_raw(self.rows, self.cols, data))
    }

    pub fn scale(&self, s: f64) -> DenseMatrix {
        Self::from_raw(self.rows, self.cols, self.data.iter().map(|v| v * s).collect())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> DenseMatrix {
        Self::from_raw(self.rows, self.cols, self.data.iter().map(|&v| f(v)).collect())
    }

    pub fn frobenius_norm(&self) -> f64 {
        frobenius_norm(self)
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn row_norms(&self) -> Vec<f64> {
        (0..self.rows).map(|i| norm2(self.row(i))).collect()
    }

    /// Copy with the first `k` columns.
    pub fn leading_columns(&self, k: usize) -> DenseMatrix {
        let k = k.min(self.cols);
        DenseMatrix::from_fn(self.rows, k, |i, j| self.get(i, j))
    }

    /// Copy with the first `k` rows.
    pub fn leading_rows(&self, k: usize) -> DenseMatrix {
        let k = k.min(self.rows);
        Self::from_raw(k, self.cols, self.data[..k * self.cols].to_vec())
    }

    /// Largest absolute deviation of `selfᵀ self` from the identity.
    pub fn orthonormality_defect(&self) -> f64 {
        let gram = self.t_matmul(self).expect("shapes agree");
        let mut worst: f64 = 0.0;
        for i in 0..gram.rows {
            for j in 0..gram.cols {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((gram.get(i, j) - target).abs());
            }
        }
        worst
    }
}

#[inline]
pub(crate) fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

#[inline]
pub(crate) fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// Euclidean norm, scaled to avoid overflow.
pub(crate) fn norm2(x: &[f64]) -> f64 {
    let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    let s: f64 = x.iter().map(|v| (v / scale) * (v / scale)).sum();
    scale * s.sqrt()
}

/// Square root of the sum of squared entries.
pub fn frobenius_norm(a: &DenseMatrix) -> f64 {
    norm2(&a.data)
}

/// Matrix with i.i.d. `N(mean, stddev²)` entries. Entry `(i, j)` is the
/// Box–Muller normal at counter index `i * cols + j` of `seed`.
pub fn gaussian_matrix(rows: usize, cols: usize, mean: f64, stddev: f64, seed: RngSeed) -> Result<DenseMatrix> {
    if !(stddev >= 0.0) || !stddev.is_finite() {
        return Err(invalid(format!("stddev must be finite and non-negative, got {stddev}")));
    }
    if !mean.is_finite() {
        return Err(invalid("mean must be finite"));
    }
    if stddev == 0.0 {
        return Ok(DenseMatrix::from_raw(rows, cols, vec![mean; rows * cols]));
    }
    let mut data = vec![0.0; rows * cols];
    if cols > 0 {
        data.par_chunks_mut(cols).enumerate().for_each(|(i, out)| {
            let base = (i * cols) as u64;
            for (j, v) in out.iter_mut().enumerate() {
                *v = mean + stddev * seed.standard_normal_at(base + j as u64);
            }
        });
    }
    Ok(DenseMatrix::from_raw(rows, cols, data))
}

/// Power-iteration estimate of the largest singular value.
///
/// Iterates `x ← AᵀA x / ‖AᵀA x‖` from a seeded Gaussian start and returns `‖A x‖`.
pub fn spectral_norm(a: &DenseMatrix, iters: usize, seed: RngSeed) -> f64 {
    let (m, n) = a.shape();
    if m == 0 || n == 0 || a.is_zero() {
        return 0.0;
    }
    let mut x: Vec<f64> = (0..n as u64).map(|i| seed.standard_normal_at(i)).collect();
    normalize(&mut x);
    let mut estimate = 0.0;
    for _ in 0..iters.max(1) {
        let ax = mat_vec(a, &x);
        estimate = norm2(&ax);
        let mut next = mat_t_vec(a, &ax);
        if normalize(&mut next) == 0.0 {
            // x fell into the null space; any estimate so far stands
            break;
        }
        x = next;
    }
    let last = norm2(&mat_vec(a, &x));
    estimate.max(last)
}

fn normalize(x: &mut [f64]) -> f64 {
    let n = norm2(x);
    if n > 0.0 {
        x.iter_mut().for_each(|v| *v /= n);
    }
    n
}

pub(crate) fn mat_vec(a: &DenseMatrix, x: &[f64]) -> Vec<f64> {
    (0..a.rows).map(|i| dot(a.row(i), x)).collect()
}

pub(crate) fn mat_t_vec(a: &DenseMatrix, y: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.cols];
    for (i, &yi) in y.iter().enumerate() {
        axpy(yi, a.row(i), &mut out);
    }
    out
}
