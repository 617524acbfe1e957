//! The composed embedding `Π₂Π₁D⁻¹` and the ℓ2→ℓ1 Gaussian map.
//!
//! `D` is diagonal with i.i.d. entries of CDF `1 − e^{−G(t)}`, `Π₁` is a
//! CountSketch (one `±1` per input coordinate, at a hashed row) and `Π₂` is a
//! dense Gaussian scaled by `1/√t₂`. Applying `Π₁D⁻¹` touches every stored
//! nonzero of the input once, so the whole map costs
//! `O(nnz(A)) + O(t₂·t₁·d)`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::MatrixHandle;
use crate::orlicz::OrliczFunction;
use crate::randgen::{sample_gaussian, sample_generalized_exponential};

/// Diagonal draws are clamped below at `G⁻¹(DIAG_FLOOR)` so `1/u` stays finite.
const DIAG_FLOOR: f64 = 1e-300;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SketchMode {
    /// `Π₂Π₁D⁻¹`.
    Full,
    /// `D⁻¹` only; the output keeps all `n` rows.
    DiagonalOnly,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SketchOptions {
    /// `t₁ = ⌈c1·d²⌉` before clamping.
    pub c1: f64,
    /// `t₂ = ⌈c2·d⌉` before clamping.
    pub c2: f64,
    pub mode: SketchMode,
}

impl Default for SketchOptions {
    fn default() -> Self {
        SketchOptions { c1: 10.0, c2: 20.0, mode: SketchMode::Full }
    }
}

/// `(n, t₁, t₂)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SketchDims {
    pub n: usize,
    pub t1: usize,
    pub t2: usize,
}

/// `t₁ = min(n, ⌈c1·d²⌉)`, `t₂ = min(t₁, ⌈c2·d⌉)`.
pub fn sketch_dims(n: usize, d: usize, c1: f64, c2: f64) -> SketchDims {
    let t1 = ((c1 * (d * d) as f64).ceil() as usize).clamp(1, n);
    let t2 = ((c2 * d as f64).ceil() as usize).clamp(1, t1);
    SketchDims { n, t1, t2 }
}

/// The operator `Π₂Π₁D⁻¹` (or `D⁻¹` alone in diagonal-only mode).
#[derive(Clone, Debug)]
pub struct ComposedSketch {
    dims: SketchDims,
    mode: SketchMode,
    diag_inv: Vec<f64>,
    /// Row of `Π₁` for each input coordinate; `None` when `Π₁` is the identity.
    hash: Option<Vec<usize>>,
    signs: Vec<f64>,
    /// `t₂ × t₁`, entries `N(0,1)/√t₂`.
    gauss: Option<DMatrix<f64>>,
}

/// Builds the embedding for an `n × d` input with `t₁ = Θ(d²)`, `t₂ = Θ(d)`.
pub fn build_orlicz_sketch<R: Rng + ?Sized>(
    g: &OrliczFunction,
    n: usize,
    d: usize,
    opts: &SketchOptions,
    rng: &mut R,
) -> Result<ComposedSketch> {
    if d == 0 || n < d {
        return Err(Error::DimensionMismatch(format!("sketch needs n >= d >= 1, got n={n}, d={d}")));
    }
    if !(opts.c1 > 0.0 && opts.c2 > 0.0) {
        return Err(Error::InvalidParameter("sketch multipliers must be positive".into()));
    }
    let dims = sketch_dims(n, d, opts.c1, opts.c2);
    ComposedSketch::with_dims(g, dims, opts.mode, rng)
}

impl ComposedSketch {
    /// Builds with explicit `(n, t₁, t₂)`; requires `n ≥ t₁ ≥ t₂ ≥ 1`.
    pub fn with_dims<R: Rng + ?Sized>(
        g: &OrliczFunction,
        dims: SketchDims,
        mode: SketchMode,
        rng: &mut R,
    ) -> Result<Self> {
        let SketchDims { n, t1, t2 } = dims;
        if !(n >= t1 && t1 >= t2 && t2 >= 1) {
            return Err(Error::DimensionMismatch(format!(
                "sketch dims must satisfy n >= t1 >= t2 >= 1, got {n}, {t1}, {t2}"
            )));
        }
        let floor = g.inverse(DIAG_FLOOR);
        let diag_inv = sample_generalized_exponential(g, rng, n)
            .into_iter()
            .map(|u| 1.0 / u.max(floor))
            .collect();
        let (hash, signs, gauss) = match mode {
            SketchMode::DiagonalOnly => (None, Vec::new(), None),
            SketchMode::Full => {
                let (hash, signs) = if t1 < n {
                    let hash: Vec<usize> = (0..n).map(|_| rng.random_range(0..t1)).collect();
                    let signs: Vec<f64> =
                        (0..n).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect();
                    (Some(hash), signs)
                } else {
                    (None, Vec::new())
                };
                let scale = 1.0 / (t2 as f64).sqrt();
                let g = sample_gaussian(rng, t2 * t1);
                let gauss = DMatrix::from_iterator(t2, t1, g.into_iter().map(|v| v * scale));
                (hash, signs, Some(gauss))
            }
        };
        Ok(ComposedSketch { dims, mode, diag_inv, hash, signs, gauss })
    }

    pub fn dims(&self) -> SketchDims {
        self.dims
    }

    pub fn mode(&self) -> SketchMode {
        self.mode
    }

    /// The diagonal of `D⁻¹`.
    pub fn diag_inv(&self) -> &[f64] {
        &self.diag_inv
    }

    /// `Π₁`'s row for each coordinate, or `None` when `Π₁` is the identity.
    pub fn hash(&self) -> Option<&[usize]> {
        self.hash.as_deref()
    }

    pub fn signs(&self) -> &[f64] {
        &self.signs
    }

    pub fn gauss(&self) -> Option<&DMatrix<f64>> {
        self.gauss.as_ref()
    }

    /// Number of rows of the sketched output.
    pub fn output_rows(&self) -> usize {
        match self.mode {
            SketchMode::Full => self.dims.t2,
            SketchMode::DiagonalOnly => self.dims.n,
        }
    }

    fn check_rows(&self, rows: usize) -> Result<()> {
        if rows != self.dims.n {
            return Err(Error::DimensionMismatch(format!(
                "sketch built for {} rows, input has {rows}",
                self.dims.n
            )));
        }
        Ok(())
    }

    /// `Π₁D⁻¹A` (or `D⁻¹A` when `Π₁` is the identity); one pass over the
    /// stored nonzeros in storage order.
    pub fn apply_stage1(&self, a: &MatrixHandle) -> Result<DMatrix<f64>> {
        self.check_rows(a.rows())?;
        let d = a.cols();
        match &self.hash {
            Some(hash) => {
                let t1 = self.dims.t1;
                let mut acc = vec![0.0; t1 * d];
                a.for_each_nonzero(|i, j, v| {
                    acc[j * t1 + hash[i]] += self.signs[i] * (self.diag_inv[i] * v);
                });
                Ok(DMatrix::from_vec(t1, d, acc))
            }
            None => {
                let n = self.dims.n;
                let mut acc = vec![0.0; n * d];
                a.for_each_nonzero(|i, j, v| acc[j * n + i] += self.diag_inv[i] * v);
                Ok(DMatrix::from_vec(n, d, acc))
            }
        }
    }

    /// `S·A` as a dense matrix with [`Self::output_rows`] rows.
    pub fn apply(&self, a: &MatrixHandle) -> Result<DMatrix<f64>> {
        let stage1 = self.apply_stage1(a)?;
        Ok(match &self.gauss {
            Some(g) => g * stage1,
            None => stage1,
        })
    }

    /// `S·x` for a single vector.
    pub fn apply_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_rows(x.len())?;
        let stage1: Vec<f64> = match &self.hash {
            Some(hash) => {
                let mut acc = vec![0.0; self.dims.t1];
                for (i, &v) in x.iter().enumerate() {
                    if v != 0.0 {
                        acc[hash[i]] += self.signs[i] * (self.diag_inv[i] * v);
                    }
                }
                acc
            }
            None => x.iter().zip(&self.diag_inv).map(|(v, w)| w * v).collect(),
        };
        Ok(match &self.gauss {
            Some(g) => (g * nalgebra::DVector::from_vec(stage1)).as_slice().to_vec(),
            None => stage1,
        })
    }

    /// The operator as an explicit dense matrix (small inputs and tests).
    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dims.n;
        let id = MatrixHandle::scaled_identity(n, 1.0);
        self.apply(&id).expect("identity matches sketch dims")
    }
}

/// `Π₂(Π₁(D⁻¹A))`.
pub fn apply_sketch(s: &ComposedSketch, a: &MatrixHandle) -> Result<DMatrix<f64>> {
    s.apply(a)
}

/// `B = (√(π/2)/t₃)·Q`, `Q` a `t₃ × t₂` standard Gaussian matrix.
#[derive(Clone, Debug)]
pub struct L2toL1Map {
    matrix: DMatrix<f64>,
    t2: usize,
    t3: usize,
}

/// `t₃ = ⌈c3·t₂·log₂(t₂ + 1)⌉`.
pub fn l2_to_l1_rows(t2: usize, c3: f64) -> usize {
    ((c3 * t2 as f64 * ((t2 + 1) as f64).log2()).ceil() as usize).max(1)
}

pub fn build_l2_to_l1<R: Rng + ?Sized>(t2: usize, c3: f64, rng: &mut R) -> Result<L2toL1Map> {
    if t2 == 0 {
        return Err(Error::InvalidParameter("l2-to-l1 map needs t2 >= 1".into()));
    }
    if !(c3 > 0.0) {
        return Err(Error::InvalidParameter("c3 must be positive".into()));
    }
    let t3 = l2_to_l1_rows(t2, c3);
    let scale = L2toL1Map::scale_for(t3);
    let q = sample_gaussian(rng, t3 * t2);
    let matrix = DMatrix::from_iterator(t3, t2, q.into_iter().map(|v| v * scale));
    Ok(L2toL1Map { matrix, t2, t3 })
}

impl L2toL1Map {
    /// `√(π/2)/t₃`: `E|N(0,1)| = √(2/π)` so `E‖Bx‖₁ = ‖x‖₂`.
    pub fn scale_for(t3: usize) -> f64 {
        (PI / 2.0).sqrt() / t3 as f64
    }

    pub fn t2(&self) -> usize {
        self.t2
    }

    pub fn t3(&self) -> usize {
        self.t3
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn apply(&self, m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if m.nrows() != self.t2 {
            return Err(Error::DimensionMismatch(format!(
                "l2-to-l1 map expects {} rows, got {}",
                self.t2,
                m.nrows()
            )));
        }
        Ok(&self.matrix * m)
    }

    pub fn apply_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.t2 {
            return Err(Error::DimensionMismatch(format!(
                "l2-to-l1 map expects length {}, got {}",
                self.t2,
                x.len()
            )));
        }
        Ok((&self.matrix * nalgebra::DVector::from_column_slice(x)).as_slice().to_vec())
    }
}
