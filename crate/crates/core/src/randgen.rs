//! Seeded samplers for the distributions the embeddings need.
//!
//! Every random object is drawn from a [`SeedSpec`]-derived ChaCha8 stream.
//! ChaCha is counter based and platform independent, and distinct stream
//! indices select non-overlapping keystreams, so per-trial substreams stay
//! reproducible under parallel execution.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::orlicz::OrliczFunction;

/// The generator every sampler in the crate draws from.
pub type SketchRng = ChaCha8Rng;

/// A reproducible `(seed, stream)` pair.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedSpec {
    pub seed: u64,
    pub stream: u64,
}

impl SeedSpec {
    pub fn new(seed: u64) -> Self {
        SeedSpec { seed, stream: 0 }
    }

    pub fn with_stream(seed: u64, stream: u64) -> Self {
        SeedSpec { seed, stream }
    }

    pub fn rng(&self) -> SketchRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }

    /// A child substream; children of distinct indices (or of distinct
    /// parents) land on distinct streams with overwhelming probability.
    pub fn child(&self, index: u64) -> SeedSpec {
        SeedSpec {
            seed: self.seed,
            stream: splitmix64(splitmix64(self.stream) ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15)),
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `count` draws with CDF `1 − e^{−G(t)}`, each `G⁻¹(E)` for `E ~ Exp(1)`.
pub fn sample_generalized_exponential<R: Rng + ?Sized>(
    g: &OrliczFunction,
    rng: &mut R,
    count: usize,
) -> Vec<f64> {
    (0..count)
        .map(|_| {
            let e: f64 = Exp1.sample(rng);
            g.inverse(e)
        })
        .collect()
}

/// Symmetric standard p-stable draws by Chambers–Mallows–Stuck.
///
/// With `V ~ U(−π/2, π/2)` and `W ~ Exp(1)`:
/// `X = sin(pV)/cos(V)^{1/p} · (cos(V − pV)/W)^{(1−p)/p}`.
/// `p = 1` is the standard Cauchy `tan(V)`; `p = 2` is `N(0, 2)` under this
/// convention (characteristic function `exp(−|t|^p)`).
pub fn sample_p_stable<R: Rng + ?Sized>(p: f64, rng: &mut R, count: usize) -> Result<Vec<f64>> {
    if !(1.0..=2.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("p-stable needs 1 <= p <= 2, got {p}")));
    }
    Ok((0..count).map(|_| p_stable_one(p, rng)).collect())
}

fn p_stable_one<R: Rng + ?Sized>(p: f64, rng: &mut R) -> f64 {
    // Open interval: avoid the poles of tan and cos at ±π/2.
    let u: f64 = loop {
        let u = rng.random::<f64>();
        if u > 0.0 {
            break u;
        }
    };
    let v = PI * (u - 0.5);
    if p == 1.0 {
        return v.tan();
    }
    let w: f64 = Exp1.sample(rng);
    let cos_v = v.cos();
    (p * v).sin() / cos_v.powf(1.0 / p) * ((v - p * v).cos() / w).powf((1.0 - p) / p)
}

/// Standard normal draws.
pub fn sample_gaussian<R: Rng + ?Sized>(rng: &mut R, count: usize) -> Vec<f64> {
    (0..count).map(|_| StandardNormal.sample(rng)).collect()
}

/// Uniform draws on `(lo, hi)`.
pub fn sample_uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64, count: usize) -> Vec<f64> {
    (0..count).map(|_| lo + (hi - lo) * rng.random::<f64>()).collect()
}
