//! Dense or coordinate-sparse real matrices.

use std::collections::HashSet;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// One stored entry `(row, col, value)` of a coordinate matrix.
pub type Triplet = (usize, usize, f64);

#[derive(Clone, Debug, PartialEq)]
pub enum Storage {
    Dense(DMatrix<f64>),
    /// Coordinate triplets; no duplicate `(row, col)` pairs.
    Sparse(Vec<Triplet>),
}

/// A real `rows × cols` matrix in dense or coordinate form.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixHandle {
    storage: Storage,
    rows: usize,
    cols: usize,
    nnz: usize,
}

impl MatrixHandle {
    pub fn dense(m: DMatrix<f64>) -> Self {
        let nnz = m.iter().filter(|v| **v != 0.0).count();
        MatrixHandle { rows: m.nrows(), cols: m.ncols(), nnz, storage: Storage::Dense(m) }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} values for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self::dense(DMatrix::from_row_slice(rows, cols, data)))
    }

    /// An `n × 1` column.
    pub fn column(values: &[f64]) -> Self {
        Self::dense(DMatrix::from_column_slice(values.len(), 1, values))
    }

    /// Validates indices and rejects duplicate coordinates.
    pub fn sparse(rows: usize, cols: usize, triplets: Vec<Triplet>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(triplets.len());
        for (k, &(i, j, v)) in triplets.iter().enumerate() {
            if i >= rows || j >= cols {
                return Err(Error::DimensionMismatch(format!(
                    "triplet {k} at ({i}, {j}) outside a {rows}x{cols} matrix"
                )));
            }
            if !v.is_finite() {
                return Err(Error::NonFinite("sparse matrix entry"));
            }
            if !seen.insert((i, j)) {
                return Err(Error::InvalidParameter(format!("duplicate entry ({i}, {j})")));
            }
        }
        let nnz = triplets.len();
        Ok(MatrixHandle { storage: Storage::Sparse(triplets), rows, cols, nnz })
    }

    /// `n × n` identity scaled by `scale`, in coordinate form.
    pub fn scaled_identity(n: usize, scale: f64) -> Self {
        let triplets = (0..n).map(|i| (i, i, scale)).collect();
        MatrixHandle { storage: Storage::Sparse(triplets), rows: n, cols: n, nnz: n }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Nonzero count for dense storage, stored-triplet count for sparse.
    pub fn nnz(&self) -> usize {
        self.nnz
    }

    pub fn storage(&self) -> &Storage {
        &self.storage
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self.storage, Storage::Sparse(_))
    }

    /// Visits each stored nonzero exactly once.
    #[inline]
    pub fn for_each_nonzero(&self, mut f: impl FnMut(usize, usize, f64)) {
        match &self.storage {
            Storage::Dense(m) => {
                for j in 0..m.ncols() {
                    for (i, &v) in m.column(j).iter().enumerate() {
                        if v != 0.0 {
                            f(i, j, v);
                        }
                    }
                }
            }
            Storage::Sparse(t) => {
                for &(i, j, v) in t {
                    f(i, j, v);
                }
            }
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        match &self.storage {
            Storage::Dense(m) => m.clone(),
            Storage::Sparse(_) => {
                let mut m = DMatrix::zeros(self.rows, self.cols);
                self.for_each_nonzero(|i, j, v| m[(i, j)] = v);
                m
            }
        }
    }

    pub fn transpose(&self) -> MatrixHandle {
        match &self.storage {
            Storage::Dense(m) => MatrixHandle::dense(m.transpose()),
            Storage::Sparse(t) => MatrixHandle {
                storage: Storage::Sparse(t.iter().map(|&(i, j, v)| (j, i, v)).collect()),
                rows: self.cols,
                cols: self.rows,
                nnz: self.nnz,
            },
        }
    }

    pub fn is_finite(&self) -> bool {
        let mut ok = true;
        self.for_each_nonzero(|_, _, v| ok &= v.is_finite());
        ok
    }

    /// `A·x`.
    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "vector of length {} against {} columns",
                x.len(),
                self.cols
            )));
        }
        Ok(match &self.storage {
            Storage::Dense(m) => (m * DVector::from_column_slice(x)).as_slice().to_vec(),
            Storage::Sparse(_) => {
                let mut out = vec![0.0; self.rows];
                self.for_each_nonzero(|i, j, v| out[i] += v * x[j]);
                out
            }
        })
    }

    /// `Aᵀ·y`.
    pub fn tr_mul_vec(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.rows {
            return Err(Error::DimensionMismatch(format!(
                "vector of length {} against {} rows",
                y.len(),
                self.rows
            )));
        }
        Ok(match &self.storage {
            Storage::Dense(m) => (m.tr_mul(&DVector::from_column_slice(y))).as_slice().to_vec(),
            Storage::Sparse(_) => {
                let mut out = vec![0.0; self.cols];
                self.for_each_nonzero(|i, j, v| out[j] += v * y[i]);
                out
            }
        })
    }

    /// `A·M` for dense `M`.
    pub fn mul_dense(&self, m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if m.nrows() != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} times {}x{}",
                self.rows,
                self.cols,
                m.nrows(),
                m.ncols()
            )));
        }
        Ok(match &self.storage {
            Storage::Dense(a) => a * m,
            Storage::Sparse(_) => {
                let mut out = DMatrix::zeros(self.rows, m.ncols());
                self.for_each_nonzero(|i, j, v| {
                    for c in 0..m.ncols() {
                        out[(i, c)] += v * m[(j, c)];
                    }
                });
                out
            }
        })
    }

    /// `L·A` for dense `L`.
    pub fn left_mul_dense(&self, l: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if l.ncols() != self.rows {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} times {}x{}",
                l.nrows(),
                l.ncols(),
                self.rows,
                self.cols
            )));
        }
        Ok(match &self.storage {
            Storage::Dense(a) => l * a,
            Storage::Sparse(_) => {
                let mut out = DMatrix::zeros(l.nrows(), self.cols);
                self.for_each_nonzero(|i, j, v| {
                    let src = l.column(i);
                    let mut dst = out.column_mut(j);
                    dst.axpy(v, &src, 1.0);
                });
                out
            }
        })
    }
}

impl From<DMatrix<f64>> for MatrixHandle {
    fn from(m: DMatrix<f64>) -> Self {
        MatrixHandle::dense(m)
    }
}
