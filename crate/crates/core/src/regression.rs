//! Sketch-and-solve regression under Orlicz norms.
//!
//! [`orlicz_regress`] embeds `A` and `b` with one [`ComposedSketch`] and
//! solves the sketched least-squares problem. [`combined_regress`] handles
//! `min Σᵢ ‖Aᵢx − bᵢ‖_{Gᵢ}` by sketching each term into ℓ2, mapping ℓ2 into ℓ1
//! with a Gaussian matrix, and solving one stacked ℓ1 problem.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{lstsq, ThinSvd, RANK_TOL};
use crate::matrix::MatrixHandle;
use crate::orlicz::{orlicz_norm, OrliczFunction};
use crate::randgen::SeedSpec;
use crate::sketch::{build_l2_to_l1, sketch_dims, ComposedSketch, SketchDims, SketchMode};

/// Child stream used when the first sketch comes out rank deficient.
const RESEED_STREAM: u64 = u64::MAX;

/// Which embedding [`orlicz_regress`] applies.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SketchPath {
    /// Diagonal only up to [`RegressOptions::passthrough_max_rows`] rows,
    /// the full composition above.
    #[default]
    Auto,
    Full,
    Passthrough,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct L1Options {
    /// Absolute stopping tolerance on the objective; `None` means `1e-9·‖y‖₁`.
    pub tol: Option<f64>,
    pub max_iter: usize,
}

impl Default for L1Options {
    fn default() -> Self {
        L1Options { tol: None, max_iter: 200 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegressOptions {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub path: SketchPath,
    pub passthrough_max_rows: usize,
    pub l1: L1Options,
}

impl Default for RegressOptions {
    fn default() -> Self {
        RegressOptions {
            c1: 10.0,
            c2: 20.0,
            c3: 8.0,
            path: SketchPath::Auto,
            passthrough_max_rows: 5000,
            l1: L1Options::default(),
        }
    }
}

/// Sizes of one term's embedding; `t3` is set when the ℓ2→ℓ1 map was used.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermDims {
    pub t1: usize,
    pub t2: usize,
    pub t3: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegressionOutput {
    pub solution: Vec<f64>,
    /// The objective at `solution`, in the problem's own norm.
    pub loss: f64,
    /// One entry per term.
    pub sketch_dims: Vec<TermDims>,
    /// The seed that produced the accepted sketch (differs from the requested
    /// one after a reseed).
    pub seed: SeedSpec,
    pub wall_time: f64,
}

/// One `‖Aᵢx − bᵢ‖_{Gᵢ}` summand.
#[derive(Clone, Debug)]
pub struct CombinedTerm {
    pub g: OrliczFunction,
    pub a: MatrixHandle,
    pub b: Vec<f64>,
}

/// Minimum-norm least squares `M†y`.
pub fn least_squares(m: &DMatrix<f64>, y: &[f64]) -> Result<Vec<f64>> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Err(Error::DimensionMismatch("least squares needs a non-empty matrix".into()));
    }
    Ok(lstsq(m, y)?.0)
}

fn check_problem(a: &MatrixHandle, b: &[f64]) -> Result<()> {
    if b.len() != a.rows() {
        return Err(Error::DimensionMismatch(format!(
            "A has {} rows but b has length {}",
            a.rows(),
            b.len()
        )));
    }
    if a.cols() == 0 {
        return Err(Error::DimensionMismatch("A has no columns".into()));
    }
    if !a.is_finite() {
        return Err(Error::NonFinite("design matrix"));
    }
    if b.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("response vector"));
    }
    Ok(())
}

/// `‖Ax − b‖_G`.
pub fn orlicz_loss(g: &OrliczFunction, a: &MatrixHandle, b: &[f64], x: &[f64]) -> Result<f64> {
    let mut r = a.mul_vec(x)?;
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri -= bi;
    }
    orlicz_norm(g, &r)
}

/// Sketch `A` and `b` with one embedding and solve the sketched least squares.
pub fn orlicz_regress(
    g: &OrliczFunction,
    a: &MatrixHandle,
    b: &[f64],
    opts: &RegressOptions,
    seed: SeedSpec,
) -> Result<RegressionOutput> {
    let start = Instant::now();
    check_problem(a, b)?;
    let (n, d) = (a.rows(), a.cols());
    if n < d {
        return Err(Error::DimensionMismatch(format!("regression needs n >= d, got n={n}, d={d}")));
    }
    let mode = match opts.path {
        SketchPath::Full => SketchMode::Full,
        SketchPath::Passthrough => SketchMode::DiagonalOnly,
        SketchPath::Auto if n <= opts.passthrough_max_rows => SketchMode::DiagonalOnly,
        SketchPath::Auto => SketchMode::Full,
    };
    let dims = match mode {
        SketchMode::Full => sketch_dims(n, d, opts.c1, opts.c2),
        SketchMode::DiagonalOnly => SketchDims { n, t1: n, t2: n },
    };

    let mut rank = 0;
    for used in [seed, seed.child(RESEED_STREAM)] {
        let s = ComposedSketch::with_dims(g, dims, mode, &mut used.rng())?;
        let sa = s.apply(a)?;
        let sb = s.apply_vec(b)?;
        let svd = ThinSvd::new(&sa)?;
        rank = svd.rank(RANK_TOL);
        if rank < d {
            log::warn!("sketched matrix has rank {rank} < {d} (seed {used:?})");
            continue;
        }
        let x = svd.solve(&DVector::from_vec(sb), RANK_TOL).as_slice().to_vec();
        let loss = orlicz_loss(g, a, b, &x)?;
        return Ok(RegressionOutput {
            solution: x,
            loss,
            sketch_dims: vec![TermDims { t1: dims.t1, t2: dims.t2, t3: None }],
            seed: used,
            wall_time: start.elapsed().as_secs_f64(),
        });
    }
    Err(Error::RankDeficient { rank, cols: d })
}

/// Result of [`l1_regress`].
#[derive(Clone, Debug, PartialEq)]
pub struct L1Fit {
    pub solution: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

fn l1_objective(m: &DMatrix<f64>, y: &[f64], x: &[f64]) -> f64 {
    residual(m, y, x).iter().map(|r| r.abs()).sum()
}

fn residual(m: &DMatrix<f64>, y: &[f64], x: &[f64]) -> Vec<f64> {
    let mx = m * DVector::from_column_slice(x);
    mx.iter().zip(y).map(|(p, q)| p - q).collect()
}

/// `min ‖Mx − y‖₁` by smoothed iteratively reweighted least squares.
///
/// Weights are `1/max(|rᵢ|, ε)` with `ε` halved every iteration from
/// `1e-2·‖y‖_∞` to `1e-10`. The best iterate is then refined by fitting the
/// `d` rows with smallest residual exactly, kept only if it lowers the
/// objective.
pub fn l1_regress(m: &DMatrix<f64>, y: &[f64], opts: &L1Options) -> Result<L1Fit> {
    let (t, d) = (m.nrows(), m.ncols());
    if y.len() != t {
        return Err(Error::DimensionMismatch(format!("{t} rows but y has length {}", y.len())));
    }
    if d == 0 || t < d {
        return Err(Error::DimensionMismatch(format!("l1 regression needs t >= d >= 1, got t={t}, d={d}")));
    }
    if m.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("l1 regression input"));
    }
    let y_l1: f64 = y.iter().map(|v| v.abs()).sum();
    if y_l1 == 0.0 {
        return Ok(L1Fit { solution: vec![0.0; d], objective: 0.0, iterations: 0 });
    }
    let y_inf = y.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let tol = opts.tol.unwrap_or(1e-9 * y_l1);
    const EPS_FLOOR: f64 = 1e-10;

    let mut x = lstsq(m, y)?.0;
    let mut obj = l1_objective(m, y, &x);
    let mut best = (x.clone(), obj);
    let mut eps = (1e-2 * y_inf).max(EPS_FLOOR);
    let mut increases = 0;
    let mut iterations = 0;
    let mut weighted = m.clone();
    let mut rhs = vec![0.0; t];

    while iterations < opts.max_iter {
        iterations += 1;
        let r = residual(m, y, &x);
        for i in 0..t {
            let w = 1.0 / r[i].abs().max(eps).sqrt();
            for j in 0..d {
                weighted[(i, j)] = m[(i, j)] * w;
            }
            rhs[i] = y[i] * w;
        }
        let next = lstsq(&weighted, &rhs)?.0;
        let next_obj = l1_objective(m, y, &next);
        if !next_obj.is_finite() {
            return Err(Error::NonFinite("l1 regression iterate"));
        }
        if next_obj > obj + tol {
            increases += 1;
            if increases >= 5 {
                return Err(Error::Diverged { iterations });
            }
        } else {
            increases = 0;
        }
        let improvement = obj - next_obj;
        x = next;
        obj = next_obj;
        if obj < best.1 {
            best = (x.clone(), obj);
        }
        let at_floor = eps <= EPS_FLOOR;
        eps = (eps / 2.0).max(EPS_FLOOR);
        if at_floor && improvement.abs() < tol {
            break;
        }
    }

    let (solution, objective) = refine_on_basis(m, y, best.0, best.1);
    Ok(L1Fit { solution, objective, iterations })
}

/// An optimal ℓ1 fit interpolates `d` rows; solve on the `d` rows with the
/// smallest residuals and keep the result if it is better.
fn refine_on_basis(m: &DMatrix<f64>, y: &[f64], mut x: Vec<f64>, mut obj: f64) -> (Vec<f64>, f64) {
    let d = m.ncols();
    for _ in 0..4 {
        let r = residual(m, y, &x);
        let mut order: Vec<usize> = (0..r.len()).collect();
        order.sort_by(|&i, &j| r[i].abs().total_cmp(&r[j].abs()));
        let rows = &order[..d];
        let sub = DMatrix::from_fn(d, d, |i, j| m[(rows[i], j)]);
        let rhs: Vec<f64> = rows.iter().map(|&i| y[i]).collect();
        let Ok((cand, rank)) = lstsq(&sub, &rhs) else { break };
        if rank < d {
            break;
        }
        let cand_obj = l1_objective(m, y, &cand);
        if cand_obj < obj {
            x = cand;
            obj = cand_obj;
        } else {
            break;
        }
    }
    (x, obj)
}

/// Sketch every term into ℓ2, map into ℓ1, stack, and solve one ℓ1 problem.
///
/// Term `i` draws its randomness from `seed.child(i)`.
pub fn combined_regress(terms: &[CombinedTerm], opts: &RegressOptions, seed: SeedSpec) -> Result<RegressionOutput> {
    let start = Instant::now();
    let first = terms.first().ok_or_else(|| Error::InvalidParameter("no regression terms".into()))?;
    let d = first.a.cols();
    for (i, term) in terms.iter().enumerate() {
        check_problem(&term.a, &term.b)?;
        if term.a.cols() != d {
            return Err(Error::DimensionMismatch(format!(
                "term {i} has {} columns, term 0 has {d}",
                term.a.cols()
            )));
        }
    }

    let mut rank = 0;
    for used in [seed, seed.child(RESEED_STREAM)] {
        let mut blocks = Vec::with_capacity(terms.len());
        let mut rhs = Vec::new();
        let mut dims = Vec::with_capacity(terms.len());
        for (i, term) in terms.iter().enumerate() {
            let mut rng = used.child(i as u64).rng();
            let sd = sketch_dims(term.a.rows(), d, opts.c1, opts.c2);
            let s = ComposedSketch::with_dims(&term.g, sd, SketchMode::Full, &mut rng)?;
            let l1map = build_l2_to_l1(sd.t2, opts.c3, &mut rng)?;
            blocks.push(l1map.apply(&s.apply(&term.a)?)?);
            rhs.extend(l1map.apply_vec(&s.apply_vec(&term.b)?)?);
            dims.push(TermDims { t1: sd.t1, t2: sd.t2, t3: Some(l1map.t3()) });
        }
        let total: usize = blocks.iter().map(|b| b.nrows()).sum();
        let mut stacked = DMatrix::zeros(total, d);
        let mut row = 0;
        for b in &blocks {
            stacked.rows_mut(row, b.nrows()).copy_from(b);
            row += b.nrows();
        }
        rank = ThinSvd::new(&stacked)?.rank(RANK_TOL);
        if rank < d {
            log::warn!("stacked sketch has rank {rank} < {d} (seed {used:?})");
            continue;
        }
        let fit = l1_regress(&stacked, &rhs, &opts.l1)?;
        let mut loss = 0.0;
        for term in terms {
            loss += orlicz_loss(&term.g, &term.a, &term.b, &fit.solution)?;
        }
        return Ok(RegressionOutput {
            solution: fit.solution,
            loss,
            sketch_dims: dims,
            seed: used,
            wall_time: start.elapsed().as_secs_f64(),
        });
    }
    Err(Error::RankDeficient { rank, cols: d })
}

/// `min ‖Ax − b‖₂ + λ′‖x‖₁` as a two-term combined problem; the penalty term
/// is dropped when `λ′ = 0`.
pub fn lasso(
    a: &MatrixHandle,
    b: &[f64],
    lambda: f64,
    opts: &RegressOptions,
    seed: SeedSpec,
) -> Result<RegressionOutput> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!("lasso penalty must be finite and >= 0, got {lambda}")));
    }
    let mut terms = vec![CombinedTerm { g: OrliczFunction::power(2.0)?, a: a.clone(), b: b.to_vec() }];
    if lambda > 0.0 {
        let d = a.cols();
        terms.push(CombinedTerm {
            g: OrliczFunction::power(1.0)?,
            a: MatrixHandle::scaled_identity(d, lambda),
            b: vec![0.0; d],
        });
    }
    combined_regress(&terms, opts, seed)
}
