//! Entrywise-ℓp low-rank approximation by sketching both sides of `A`.
//!
//! Every variant draws four random maps `S`, `T₁` (acting on rows) and `R`,
//! `T₂` (acting on columns), solves the small Frobenius problem
//! `min ‖T₁AR·XY·SAT₂ − T₁AT₂‖_F` over rank-`k` products, and returns
//! `U = ARX`, `V = Y·SA`. The variants differ only in which maps are
//! generalized-exponential embeddings and which are dense p-stable.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{column_basis, pinv, truncated_factors};
use crate::matrix::MatrixHandle;
use crate::orlicz::OrliczFunction;
use crate::randgen::{sample_p_stable, SeedSpec, SketchRng};
use crate::sketch::{sketch_dims, ComposedSketch, SketchDims, SketchMode};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LowRankVariant {
    /// `S`, `T₁` composed exponential embeddings with `t₁ = Θ(k²)`,
    /// `t₂ = Θ(k)`; `R`, `T₂` dense p-stable with `t₃ = Θ(k log k)` columns.
    Theoretical,
    /// `S` (`4k` rows) and `T₁` (`32k` rows) dense p-stable; `R`, `T₂`
    /// transposed exponential embeddings.
    #[default]
    Experimental,
    /// All four maps dense p-stable with the experimental sizes.
    AllStable,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LowRankOptions {
    pub variant: LowRankVariant,
    /// Independent runs; the one with the smallest loss is returned.
    pub restarts: usize,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    /// Experimental sizes: `t₁ = t1_per_k·k`, `t₂ = t2_ratio·t₁`.
    pub t1_per_k: usize,
    pub t2_ratio: usize,
}

impl Default for LowRankOptions {
    fn default() -> Self {
        LowRankOptions {
            variant: LowRankVariant::Experimental,
            restarts: 1,
            c1: 10.0,
            c2: 20.0,
            c3: 8.0,
            t1_per_k: 4,
            t2_ratio: 8,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LowRankFactors {
    /// `n × k`.
    pub u: DMatrix<f64>,
    /// `k × d`.
    pub v: DMatrix<f64>,
    pub k: usize,
    pub p: f64,
    /// `‖UV − A‖_p^p`.
    pub loss_p: f64,
    /// Seed of the winning run.
    pub seed: SeedSpec,
}

fn check_p(p: f64) -> Result<()> {
    if !(1.0..=2.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("entrywise p must lie in [1, 2], got {p}")));
    }
    Ok(())
}

/// `(Σ|Aᵢⱼ|^p)^{1/p}` over the stored entries.
pub fn entrywise_lp(a: &MatrixHandle, p: f64) -> Result<f64> {
    check_p(p)?;
    let mut sum = 0.0;
    a.for_each_nonzero(|_, _, v| sum += v.abs().powf(p));
    Ok(sum.powf(1.0 / p))
}

/// `Σ|(UV − A)ᵢⱼ|^p`.
pub fn entrywise_loss(u: &DMatrix<f64>, v: &DMatrix<f64>, a: &MatrixHandle, p: f64) -> Result<f64> {
    check_p(p)?;
    if u.nrows() != a.rows() || v.ncols() != a.cols() || u.ncols() != v.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "factors {}x{} and {}x{} against a {}x{} matrix",
            u.nrows(),
            u.ncols(),
            v.nrows(),
            v.ncols(),
            a.rows(),
            a.cols()
        )));
    }
    let mut diff = u * v;
    a.for_each_nonzero(|i, j, x| diff[(i, j)] -= x);
    Ok(if p == 1.0 {
        diff.iter().map(|x| x.abs()).sum()
    } else if p == 2.0 {
        diff.norm_squared()
    } else {
        diff.iter().map(|x| x.abs().powf(p)).sum()
    })
}

/// `argmin ‖C·X·Y·Dm − M‖_F` over `X` (`r × k`) and `Y` (`k × s`).
///
/// With `Q_C` an orthonormal basis of `col(C)` and `Q_D` one of `row(Dm)`,
/// `C·Z·Dm` ranges over `Q_C·W·Q_Dᵀ`, so the optimum truncates
/// `P = Q_Cᵀ·M·Q_D` to rank `k` and maps back through the pseudoinverses.
pub fn rank_constrained_ls(
    c: &DMatrix<f64>,
    dm: &DMatrix<f64>,
    m: &DMatrix<f64>,
    k: usize,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let (r, s) = (c.ncols(), dm.nrows());
    if k == 0 || k > r.min(s) {
        return Err(Error::InvalidParameter(format!("rank {k} must lie in [1, min({r}, {s})]")));
    }
    if c.nrows() != m.nrows() || dm.ncols() != m.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "C is {}x{}, Dm is {}x{}, M is {}x{}",
            c.nrows(),
            r,
            s,
            dm.ncols(),
            m.nrows(),
            m.ncols()
        )));
    }
    let qc = column_basis(c)?;
    let qd = column_basis(&dm.transpose())?;
    let p = qc.tr_mul(m) * &qd;
    let z = if p.is_empty() {
        DMatrix::zeros(r, s)
    } else {
        let (pl, pr) = truncated_factors(&p, k)?;
        pinv(c)? * (qc * pl) * (pr * qd.transpose()) * pinv(dm)?
    };
    truncated_factors(&z, k)
}

/// Entrywise-ℓp rank-`k` approximation, best of `opts.restarts` runs.
///
/// Run `i` draws from `seed.child(i)`; runs execute in parallel and the
/// argmin (lowest index on ties) is returned.
pub fn lp_lowrank(a: &MatrixHandle, k: usize, p: f64, opts: &LowRankOptions, seed: SeedSpec) -> Result<LowRankFactors> {
    check_p(p)?;
    let (n, d) = (a.rows(), a.cols());
    if k == 0 || k > n.min(d) {
        return Err(Error::InvalidParameter(format!("rank {k} must lie in [1, min({n}, {d})]")));
    }
    if opts.restarts == 0 {
        return Err(Error::InvalidParameter("restarts must be at least 1".into()));
    }
    if !a.is_finite() {
        return Err(Error::NonFinite("low-rank input"));
    }
    let runs: Vec<Result<LowRankFactors>> = (0..opts.restarts as u64)
        .into_par_iter()
        .map(|i| single_run(a, k, p, opts, seed.child(i)))
        .collect();
    let mut best: Option<LowRankFactors> = None;
    let mut first_err = None;
    for run in runs {
        match run {
            Ok(f) if f.loss_p.is_finite() => {
                if best.as_ref().is_none_or(|b| f.loss_p < b.loss_p) {
                    best = Some(f);
                }
            }
            Ok(_) => {
                first_err.get_or_insert(Error::NonFinite("low-rank loss"));
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    best.ok_or_else(|| first_err.expect("at least one run"))
}

fn dense_stable(rows: usize, cols: usize, p: f64, rng: &mut SketchRng) -> Result<DMatrix<f64>> {
    Ok(DMatrix::from_vec(rows, cols, sample_p_stable(p, rng, rows * cols)?))
}

/// `d × t` matrix whose transpose is an exponential embedding of `ℝ^d`.
fn column_embedding(g: &OrliczFunction, d: usize, t: usize, k: usize, opts: &LowRankOptions, rng: &mut SketchRng) -> Result<DMatrix<f64>> {
    let t2 = t.min(d);
    let inner = sketch_dims(d, k, opts.c1, opts.c2).t1.max(t2);
    let s = ComposedSketch::with_dims(g, SketchDims { n: d, t1: inner, t2 }, SketchMode::Full, rng)?;
    Ok(s.to_dense().transpose())
}

fn single_run(a: &MatrixHandle, k: usize, p: f64, opts: &LowRankOptions, seed: SeedSpec) -> Result<LowRankFactors> {
    let (n, d) = (a.rows(), a.cols());
    let g = OrliczFunction::power(p)?;
    let mut rng = seed.rng();
    let (sa, t1a, r, t2m) = match opts.variant {
        LowRankVariant::Theoretical => {
            let dims = sketch_dims(n, k, opts.c1, opts.c2);
            let s = ComposedSketch::with_dims(&g, dims, SketchMode::Full, &mut rng)?;
            let t1 = ComposedSketch::with_dims(&g, dims, SketchMode::Full, &mut rng)?;
            let log_k = ((k + 1) as f64).log2().ceil().max(1.0);
            let t3 = (opts.c3 * k as f64 * log_k).ceil() as usize;
            let r = dense_stable(d, t3, p, &mut rng)?;
            let t2m = dense_stable(d, t3, p, &mut rng)?;
            (s.apply(a)?, t1.apply(a)?, r, t2m)
        }
        LowRankVariant::Experimental | LowRankVariant::AllStable => {
            let t1 = (opts.t1_per_k * k).max(k);
            let t2 = (opts.t2_ratio * t1).max(k);
            let s = dense_stable(t1, n, p, &mut rng)?;
            let t1m = dense_stable(t2, n, p, &mut rng)?;
            let (r, t2m) = if opts.variant == LowRankVariant::Experimental {
                (
                    column_embedding(&g, d, t1, k, opts, &mut rng)?,
                    column_embedding(&g, d, t2, k, opts, &mut rng)?,
                )
            } else {
                (dense_stable(d, t1, p, &mut rng)?, dense_stable(d, t2, p, &mut rng)?)
            };
            (a.left_mul_dense(&s)?, a.left_mul_dense(&t1m)?, r, t2m)
        }
    };
    let c = &t1a * &r;
    let dm = &sa * &t2m;
    let m = &t1a * &t2m;
    let (x, y) = rank_constrained_ls(&c, &dm, &m, k)?;
    let u = a.mul_dense(&r)? * x;
    let v = y * sa;
    let loss_p = entrywise_loss(&u, &v, a, p)?;
    Ok(LowRankFactors { u, v, k, p, loss_p, seed })
}

/// Truncated-SVD factors, scored entrywise under `p`.
pub fn pca_baseline(a: &MatrixHandle, k: usize, p: f64) -> Result<LowRankFactors> {
    check_p(p)?;
    if k == 0 || k > a.rows().min(a.cols()) {
        return Err(Error::InvalidParameter(format!(
            "rank {k} must lie in [1, min({}, {})]",
            a.rows(),
            a.cols()
        )));
    }
    let (u, v) = truncated_factors(&a.to_dense(), k)?;
    let loss_p = entrywise_loss(&u, &v, a, p)?;
    Ok(LowRankFactors { u, v, k, p, loss_p, seed: SeedSpec::default() })
}
