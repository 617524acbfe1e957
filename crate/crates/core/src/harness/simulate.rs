//! Synthetic regression and low-rank instances.

use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::MatrixHandle;
use crate::randgen::{sample_gaussian, sample_uniform};

/// Additive noise on `b = Ax*`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseSpec {
    /// `N(0, σ²)` on every entry.
    Gaussian { sigma: f64 },
    /// `⌈fraction·n⌉` distinct entries get `Uniform(−s‖Ax*‖₂, s‖Ax*‖₂)`.
    Sparse { fraction: f64, scale: f64 },
    /// Both of the above.
    Mixed { sigma: f64, fraction: f64, scale: f64 },
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<()> {
        let (sigma, fraction, scale) = self.parts();
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!("noise sigma must be >= 0, got {sigma}")));
        }
        if !(0.0..=1.0).contains(&fraction) {
            return Err(Error::InvalidParameter(format!("noise fraction must lie in [0, 1], got {fraction}")));
        }
        if !(scale >= 0.0 && scale.is_finite()) {
            return Err(Error::InvalidParameter(format!("noise scale must be >= 0, got {scale}")));
        }
        Ok(())
    }

    /// `(σ, fraction, scale)` with absent parts set to zero.
    pub fn parts(&self) -> (f64, f64, f64) {
        match *self {
            NoiseSpec::Gaussian { sigma } => (sigma, 0.0, 0.0),
            NoiseSpec::Sparse { fraction, scale } => (0.0, fraction, scale),
            NoiseSpec::Mixed { sigma, fraction, scale } => (sigma, fraction, scale),
        }
    }

    /// Number of entries the sparse part perturbs in a length-`n` vector.
    pub fn sparse_count(&self, n: usize) -> usize {
        let (_, fraction, _) = self.parts();
        ((fraction * n as f64).ceil() as usize).min(n)
    }
}

#[derive(Clone, Debug)]
pub struct RegressionData {
    pub a: MatrixHandle,
    pub b: Vec<f64>,
    pub x_star: Vec<f64>,
}

/// The first `d + 5` rows of `A` and all of `x*` are standard Gaussian; every
/// later row copies a uniformly chosen one of those. Noise is then applied
/// once, independently per entry, to `b = Ax*`.
pub fn simulate_regression<R: Rng + ?Sized>(n: usize, d: usize, noise: &NoiseSpec, rng: &mut R) -> Result<RegressionData> {
    noise.validate()?;
    if d == 0 || n < d + 6 {
        return Err(Error::InvalidParameter(format!("simulation needs d >= 1 and n >= d + 6, got n={n}, d={d}")));
    }
    let base = d + 5;
    let x_star = sample_gaussian(rng, d);
    let head = sample_gaussian(rng, base * d);
    let mut a = DMatrix::zeros(n, d);
    for i in 0..n {
        let src = if i < base { i } else { rng.random_range(0..base) };
        for j in 0..d {
            a[(i, j)] = head[src * d + j];
        }
    }
    let clean = &a * nalgebra::DVector::from_column_slice(&x_star);
    let mut b: Vec<f64> = clean.iter().copied().collect();

    let (sigma, _, scale) = noise.parts();
    if sigma > 0.0 {
        for (bi, e) in b.iter_mut().zip(sample_gaussian(rng, n)) {
            *bi += sigma * e;
        }
    }
    let count = noise.sparse_count(n);
    if count > 0 {
        let width = scale * clean.norm();
        let picks = sample(rng, n, count).into_vec();
        let vals = sample_uniform(rng, -width, width, count);
        for (i, v) in picks.into_iter().zip(vals) {
            b[i] += v;
        }
    }
    Ok(RegressionData { a: MatrixHandle::dense(a), b, x_star })
}

#[derive(Clone, Debug)]
pub struct LowRankData {
    pub a: MatrixHandle,
    /// Planted `n × k` factor.
    pub u: DMatrix<f64>,
    /// Planted `k × d` factor.
    pub v: DMatrix<f64>,
}

/// `A = UV` with `Uniform(0, 1)` factors, plus `outliers` distinct entries
/// shifted by `Uniform(−scale, scale)`.
pub fn simulate_lowrank<R: Rng + ?Sized>(
    n: usize,
    d: usize,
    k: usize,
    outliers: usize,
    outlier_scale: f64,
    rng: &mut R,
) -> Result<LowRankData> {
    if k == 0 || k > n.min(d) {
        return Err(Error::InvalidParameter(format!("rank {k} must lie in [1, min({n}, {d})]")));
    }
    if outliers > n * d {
        return Err(Error::InvalidParameter(format!("{outliers} outliers exceed the {} entries", n * d)));
    }
    if !(outlier_scale >= 0.0 && outlier_scale.is_finite()) {
        return Err(Error::InvalidParameter(format!("outlier scale must be >= 0, got {outlier_scale}")));
    }
    let u = DMatrix::from_vec(n, k, sample_uniform(rng, 0.0, 1.0, n * k));
    let v = DMatrix::from_vec(k, d, sample_uniform(rng, 0.0, 1.0, k * d));
    let mut a = &u * &v;
    if outliers > 0 {
        let picks = sample(rng, n * d, outliers).into_vec();
        let vals = sample_uniform(rng, -outlier_scale, outlier_scale, outliers);
        for (idx, val) in picks.into_iter().zip(vals) {
            a[(idx / d, idx % d)] += val;
        }
    }
    Ok(LowRankData { a: MatrixHandle::dense(a), u, v })
}
