//! SVD-based dense helpers shared by the solvers.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Singular values below `RANK_TOL · σ_max` count as zero.
pub const RANK_TOL: f64 = 1e-12;

/// Thin SVD with singular values sorted in decreasing order.
pub struct ThinSvd {
    pub u: DMatrix<f64>,
    pub s: DVector<f64>,
    pub v_t: DMatrix<f64>,
}

impl ThinSvd {
    pub fn new(m: &DMatrix<f64>) -> Result<Self> {
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("matrix passed to SVD"));
        }
        let (rows, cols) = m.shape();
        let k = rows.min(cols);
        if k == 0 {
            return Ok(ThinSvd { u: DMatrix::zeros(rows, 0), s: DVector::zeros(0), v_t: DMatrix::zeros(0, cols) });
        }
        let fm = faer::Mat::<f64>::from_fn(rows, cols, |i, j| m[(i, j)]);
        let svd = fm.thin_svd().map_err(|_| Error::NonFinite("SVD did not converge"))?;
        let (fu, fs, fv) = (svd.U(), svd.S().column_vector(), svd.V());
        let u = DMatrix::from_fn(rows, k, |i, j| fu[(i, j)]);
        let s = DVector::from_fn(k, |i, _| fs[i]);
        let v_t = DMatrix::from_fn(k, cols, |i, j| fv[(j, i)]);
        Ok(ThinSvd { u, s, v_t })
    }

    /// Numerical rank at relative threshold `rel_tol`.
    pub fn rank(&self, rel_tol: f64) -> usize {
        let smax = self.s.iter().cloned().fold(0.0, f64::max);
        if smax == 0.0 {
            return 0;
        }
        self.s.iter().filter(|&&v| v > rel_tol * smax).count()
    }

    /// `M† y` (minimum-norm least-squares solution).
    pub fn solve(&self, y: &DVector<f64>, rel_tol: f64) -> DVector<f64> {
        let r = self.rank(rel_tol);
        let mut coef = self.u.columns(0, r).tr_mul(y);
        for i in 0..r {
            coef[i] /= self.s[i];
        }
        self.v_t.rows(0, r).tr_mul(&coef)
    }

    pub fn pinv(&self, rel_tol: f64) -> DMatrix<f64> {
        let r = self.rank(rel_tol);
        let mut vs = self.v_t.rows(0, r).transpose();
        for i in 0..r {
            let inv = 1.0 / self.s[i];
            vs.column_mut(i).scale_mut(inv);
        }
        vs * self.u.columns(0, r).transpose()
    }
}

/// Minimum-norm least squares; also returns the numerical rank of `m`.
pub fn lstsq(m: &DMatrix<f64>, y: &[f64]) -> Result<(Vec<f64>, usize)> {
    if m.nrows() != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} rows against a right-hand side of length {}",
            m.nrows(),
            y.len()
        )));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("least-squares right-hand side"));
    }
    let svd = ThinSvd::new(m)?;
    let x = svd.solve(&DVector::from_column_slice(y), RANK_TOL);
    Ok((x.as_slice().to_vec(), svd.rank(RANK_TOL)))
}

pub fn pinv(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    Ok(ThinSvd::new(m)?.pinv(RANK_TOL))
}

/// Orthonormal basis of the column space.
pub fn column_basis(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let svd = ThinSvd::new(m)?;
    let r = svd.rank(RANK_TOL);
    Ok(svd.u.columns(0, r).into_owned())
}

/// Best rank-`k` approximation in Frobenius norm, returned as factors
/// `(U_k Σ_k, V_kᵀ)`.
pub fn truncated_factors(m: &DMatrix<f64>, k: usize) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let svd = ThinSvd::new(m)?;
    let k = k.min(svd.s.len());
    let mut left = svd.u.columns(0, k).into_owned();
    for i in 0..k {
        left.column_mut(i).scale_mut(svd.s[i]);
    }
    Ok((left, svd.v_t.rows(0, k).into_owned()))
}
