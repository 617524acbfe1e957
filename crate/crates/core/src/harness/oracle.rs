//! Gradient-descent reference solver and approximation ratios.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::lstsq;
use crate::matrix::MatrixHandle;
use crate::orlicz::{gradient_at, orlicz_norm, OrliczFunction};

/// Losses this close below the oracle are treated as oracle tolerance.
pub const RATIO_CLAMP: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleOptions {
    pub lr: f64,
    /// Stop once a step improves the loss by less than this.
    pub stop: f64,
    pub max_iter: usize,
    /// Step halvings tried before a step is declared unproductive.
    pub max_halvings: u32,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions { lr: 1e-3, stop: 1e-7, max_iter: 100_000, max_halvings: 30 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub x: Vec<f64>,
    pub loss: f64,
    pub iterations: usize,
    /// False when `max_iter` was reached first.
    pub converged: bool,
}

fn residual(a: &DMatrix<f64>, b: &[f64], x: &[f64]) -> Vec<f64> {
    let ax = a * nalgebra::DVector::from_column_slice(x);
    ax.iter().zip(b).map(|(p, q)| p - q).collect()
}

/// Gradient descent on `x ↦ ‖Ax − b‖_G` from the least-squares solution.
///
/// A step that raises the loss is halved (up to `max_halvings` times), so
/// the loss sequence never increases. The run stops when a full step gains
/// less than `stop`, when no halving helps, or at `max_iter`.
pub fn oracle_solve(g: &OrliczFunction, a: &MatrixHandle, b: &[f64], opts: &OracleOptions) -> Result<OracleResult> {
    if b.len() != a.rows() {
        return Err(Error::DimensionMismatch(format!("A has {} rows but b has length {}", a.rows(), b.len())));
    }
    if a.rows().saturating_mul(a.cols()) > 10_000_000 {
        return Err(Error::InvalidParameter("oracle is limited to n·d <= 1e7".into()));
    }
    let dense = a.to_dense();
    let mut x = lstsq(&dense, b)?.0;
    let mut r = residual(&dense, b, &x);
    let mut loss = orlicz_norm(g, &r)?;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        if loss == 0.0 {
            return Ok(OracleResult { x, loss, iterations, converged: true });
        }
        iterations += 1;
        let gr = gradient_at(g, &r, loss);
        let grad = dense.tr_mul(&nalgebra::DVector::from_vec(gr));
        let mut step = opts.lr;
        let mut accepted = None;
        let mut halved = false;
        for _ in 0..=opts.max_halvings {
            let cand: Vec<f64> = x.iter().zip(grad.iter()).map(|(xi, gi)| xi - step * gi).collect();
            let cr = residual(&dense, b, &cand);
            let closs = orlicz_norm(g, &cr)?;
            if closs <= loss {
                accepted = Some((cand, cr, closs));
                break;
            }
            step /= 2.0;
            halved = true;
        }
        let Some((cand, cr, closs)) = accepted else {
            return Ok(OracleResult { x, loss, iterations, converged: true });
        };
        let improvement = loss - closs;
        x = cand;
        r = cr;
        loss = closs;
        if !halved && improvement < opts.stop {
            return Ok(OracleResult { x, loss, iterations, converged: true });
        }
    }
    log::warn!("oracle stopped at max_iter={} with loss {loss}", opts.max_iter);
    Ok(OracleResult { x, loss, iterations, converged: false })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ratio {
    /// `loss(x̂) / loss(x_opt)` as computed.
    pub raw: f64,
    /// `raw`, lifted to 1 when it sits within [`RATIO_CLAMP`] below 1;
    /// `+∞` when the oracle loss is zero and `loss(x̂)` is not.
    pub value: f64,
}

/// The ratio of two losses with the clamping rules of [`Ratio`].
pub fn ratio_from_losses(loss_hat: f64, loss_opt: f64) -> Ratio {
    if loss_opt == 0.0 {
        let v = if loss_hat == 0.0 { 1.0 } else { f64::INFINITY };
        return Ratio { raw: v, value: v };
    }
    let raw = loss_hat / loss_opt;
    let value = if raw < 1.0 && raw >= 1.0 - RATIO_CLAMP {
        log::debug!("ratio {raw} clamped to 1 (delta {})", 1.0 - raw);
        1.0
    } else {
        raw
    };
    Ratio { raw, value }
}

/// `‖Ax̂ − b‖_G / ‖Ax_opt − b‖_G` with `x_opt` from [`oracle_solve`].
pub fn approximation_ratio(
    g: &OrliczFunction,
    a: &MatrixHandle,
    b: &[f64],
    x_hat: &[f64],
    opts: &OracleOptions,
) -> Result<Ratio> {
    let oracle = oracle_solve(g, a, b, opts)?;
    let loss_hat = crate::regression::orlicz_loss(g, a, b, x_hat)?;
    Ok(ratio_from_losses(loss_hat, oracle.loss))
}
