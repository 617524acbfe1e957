//! Experiment drivers: configuration, per-trial execution and summaries.
//!
//! Trials run in parallel, each on its own substream of the configured seed,
//! and rows are gathered in trial order, so a configuration always produces
//! the same document regardless of thread count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::lstsq;
use crate::lowrank::{entrywise_loss, lp_lowrank, pca_baseline, LowRankOptions, LowRankVariant};
use crate::orlicz::{make_orlicz, OrliczFunction, OrliczKind};
use crate::randgen::SeedSpec;
use crate::regression::{l1_regress, orlicz_regress, L1Options, RegressOptions};

use super::oracle::{approximation_ratio, OracleOptions};
use super::simulate::{simulate_lowrank, simulate_regression, NoiseSpec, RegressionData};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    /// ℓ1 vs ℓ2 vs Orlicz regression under one noise model.
    Control,
    /// Huber-Orlicz regression over a grid of thresholds and sparse-noise scales.
    DeltaSweep,
    /// Several choices of `G` under Gaussian noise plus a single large outlier.
    G15,
    /// Entrywise-ℓ1 low-rank approximation against PCA.
    Lowrank,
    /// Approximation ratios against the gradient-descent oracle.
    Ratio,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    Gaussian,
    Sparse,
    Mixed,
}

/// Every knob of every experiment; fields an experiment does not use are
/// ignored by it.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub n: usize,
    pub d: usize,
    pub k: usize,
    /// Orlicz function of the sketched method, e.g. `huber(0.75)`.
    pub g: String,
    pub noise: NoiseKind,
    pub sigma: f64,
    pub fraction: f64,
    pub scale: f64,
    /// Sparse-noise scales swept by `delta_sweep` and `ratio`.
    pub scales: Vec<f64>,
    /// Huber thresholds swept by `delta_sweep` and `ratio`.
    pub deltas: Vec<f64>,
    pub outliers: usize,
    pub outlier_scale: f64,
    pub restarts: usize,
    pub p: f64,
    pub variant: LowRankVariant,
    /// Also run the all-p-stable sketch in `lowrank`.
    pub compare_stable: bool,
    pub trials: usize,
    pub seed: u64,
    /// Output path prefix for the CLI.
    pub output: Option<String>,
}

impl ExperimentConfig {
    /// The desk-scale defaults of each experiment.
    pub fn preset(kind: ExperimentKind) -> Self {
        let base = ExperimentConfig {
            experiment: kind,
            n: 200,
            d: 10,
            k: 5,
            g: "huber(0.75)".into(),
            noise: NoiseKind::Mixed,
            sigma: 5.0,
            fraction: 0.03,
            scale: 1.0,
            scales: vec![0.0, 0.5, 1.0, 2.0],
            deltas: vec![0.05, 0.1, 0.2, 0.4, 1.0, 2.0],
            outliers: 100,
            outlier_scale: 100.0,
            restarts: 50,
            p: 1.0,
            variant: LowRankVariant::Experimental,
            compare_stable: true,
            trials: 50,
            seed: 0,
            output: None,
        };
        match kind {
            ExperimentKind::Control => base,
            ExperimentKind::DeltaSweep => ExperimentConfig { n: 500, d: 30, fraction: 0.01, ..base },
            ExperimentKind::G15 => ExperimentConfig {
                n: 500,
                d: 30,
                g: "l15(0.25)".into(),
                fraction: 0.002,
                scale: 100.0,
                ..base
            },
            ExperimentKind::Lowrank => ExperimentConfig { n: 400, d: 400, trials: 20, ..base },
            ExperimentKind::Ratio => ExperimentConfig {
                scales: vec![0.0, 1.0, 2.0, 3.0],
                deltas: vec![0.1, 0.25, 0.5, 0.75],
                ..base
            },
        }
    }

    pub fn noise_spec(&self) -> NoiseSpec {
        self.noise_with_scale(self.scale)
    }

    fn noise_with_scale(&self, scale: f64) -> NoiseSpec {
        match self.noise {
            NoiseKind::Gaussian => NoiseSpec::Gaussian { sigma: self.sigma },
            NoiseKind::Sparse => NoiseSpec::Sparse { fraction: self.fraction, scale },
            NoiseKind::Mixed => NoiseSpec::Mixed { sigma: self.sigma, fraction: self.fraction, scale },
        }
    }

    pub fn orlicz(&self) -> Result<OrliczFunction> {
        make_orlicz(self.g.parse::<OrliczKind>()?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.n == 0 || self.d == 0 {
            return bad("dimensions must be positive".into());
        }
        match self.experiment {
            ExperimentKind::Lowrank => {
                if self.k == 0 || self.k > self.n.min(self.d) {
                    return bad(format!("rank k={} must lie in [1, min(n, d)]", self.k));
                }
                if self.restarts == 0 {
                    return bad("restarts must be at least 1".into());
                }
                if !(1.0..=2.0).contains(&self.p) {
                    return bad(format!("p must lie in [1, 2], got {}", self.p));
                }
                if self.outliers > self.n * self.d {
                    return bad("more outliers than entries".into());
                }
            }
            _ => {
                if self.n < self.d + 6 {
                    return bad(format!("regression experiments need n >= d + 6, got n={}, d={}", self.n, self.d));
                }
                self.orlicz()?;
                self.noise_spec().validate()?;
            }
        }
        if matches!(self.experiment, ExperimentKind::DeltaSweep | ExperimentKind::Ratio) {
            if self.deltas.is_empty() || self.deltas.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
                return bad("deltas must be a non-empty list of positive numbers".into());
            }
            if self.scales.is_empty() || self.scales.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
                return bad("scales must be a non-empty list of non-negative numbers".into());
            }
        }
        Ok(())
    }
}

/// A flat key-value config: `experiment` picks the preset, every other key
/// overrides it.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigOverrides {
    experiment: ExperimentKind,
    n: Option<usize>,
    d: Option<usize>,
    k: Option<usize>,
    g: Option<String>,
    noise: Option<NoiseKind>,
    sigma: Option<f64>,
    fraction: Option<f64>,
    scale: Option<f64>,
    scales: Option<Vec<f64>>,
    deltas: Option<Vec<f64>>,
    outliers: Option<usize>,
    outlier_scale: Option<f64>,
    restarts: Option<usize>,
    p: Option<f64>,
    variant: Option<LowRankVariant>,
    compare_stable: Option<bool>,
    trials: Option<usize>,
    seed: Option<u64>,
    output: Option<String>,
}

impl<'de> Deserialize<'de> for ExperimentConfig {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let o = ConfigOverrides::deserialize(de)?;
        let mut c = ExperimentConfig::preset(o.experiment);
        macro_rules! set {
            ($($f:ident),*) => { $(if let Some(v) = o.$f { c.$f = v; })* };
        }
        set!(n, d, k, g, noise, sigma, fraction, scale, scales, deltas, outliers, outlier_scale, restarts, p, variant, compare_stable, trials, seed);
        c.output = o.output;
        Ok(c)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub method: String,
    pub trial: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub scale: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub delta: Option<f64>,
    /// `‖x − x*‖₂`, the entrywise loss, or the approximation ratio.
    pub value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryGroup {
    pub method: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub scale: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub delta: Option<f64>,
    /// Successful trials.
    pub count: usize,
    pub mean: f64,
    pub median: f64,
    pub max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BestDelta {
    pub scale: f64,
    pub delta: f64,
    pub mean: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub groups: Vec<SummaryGroup>,
    /// Per sparse-noise scale, the threshold with the smallest mean error.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub best_delta: Vec<BestDelta>,
}

impl Summary {
    pub fn group(&self, method: &str) -> Option<&SummaryGroup> {
        self.groups.iter().find(|g| g.method == method)
    }

    pub fn mean(&self, method: &str) -> Option<f64> {
        self.group(method).map(|g| g.mean)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultsDocument {
    pub config: ExperimentConfig,
    pub rows: Vec<ResultRow>,
    pub summary: Summary,
    pub version: String,
}

fn row(method: impl Into<String>, trial: usize, value: Result<f64>) -> ResultRow {
    let method = method.into();
    let (value, error) = match value {
        Ok(v) => (Some(v), None),
        Err(e) => {
            log::warn!("trial {trial}, method {method}: {e}");
            (None, Some(e.to_string()))
        }
    };
    ResultRow { method, trial, scale: None, delta: None, value, error }
}

fn distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

fn l1_error(data: &RegressionData) -> Result<f64> {
    let fit = l1_regress(&data.a.to_dense(), &data.b, &L1Options::default())?;
    Ok(distance(&fit.solution, &data.x_star))
}

fn l2_error(data: &RegressionData) -> Result<f64> {
    Ok(distance(&lstsq(&data.a.to_dense(), &data.b)?.0, &data.x_star))
}

fn orlicz_error(g: &OrliczFunction, data: &RegressionData, seed: SeedSpec) -> Result<f64> {
    let out = orlicz_regress(g, &data.a, &data.b, &RegressOptions::default(), seed)?;
    Ok(distance(&out.solution, &data.x_star))
}

/// Seeds of one trial: `(data, sketch)`.
fn trial_seeds(config: &ExperimentConfig, group: usize, trial: usize) -> (SeedSpec, SeedSpec) {
    let unit = SeedSpec::new(config.seed).child(group as u64).child(trial as u64);
    (unit.child(0), unit.child(1))
}

/// Runs `unit(group, trial)` over every pair in parallel and concatenates
/// the rows in `(group, trial)` order.
fn run_units<F>(groups: usize, trials: usize, unit: F) -> Vec<ResultRow>
where
    F: Fn(usize, usize) -> Vec<ResultRow> + Sync,
{
    let pairs: Vec<(usize, usize)> = (0..groups).flat_map(|g| (0..trials).map(move |t| (g, t))).collect();
    let chunks: Vec<Vec<ResultRow>> = pairs.par_iter().map(|&(g, t)| unit(g, t)).collect();
    chunks.into_iter().flatten().collect()
}

fn control(config: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let g = config.orlicz()?;
    let noise = config.noise_spec();
    Ok(run_units(1, config.trials, |group, trial| {
        let (data_seed, sketch_seed) = trial_seeds(config, group, trial);
        match simulate_regression(config.n, config.d, &noise, &mut data_seed.rng()) {
            Ok(data) => vec![
                row("l1", trial, l1_error(&data)),
                row("l2", trial, l2_error(&data)),
                row("orlicz", trial, orlicz_error(&g, &data, sketch_seed)),
            ],
            Err(e) => vec![row("data", trial, Err(e))],
        }
    }))
}

fn g15(config: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let candidates = [
        OrliczKind::Power { p: 1.5 },
        OrliczKind::Huber { delta: 0.25 },
        OrliczKind::Huber { delta: 0.75 },
    ];
    let mut gs: Vec<(String, OrliczFunction)> = Vec::new();
    for kind in candidates {
        gs.push((kind.to_string(), make_orlicz(kind)?));
    }
    gs.push((config.g.parse::<OrliczKind>()?.to_string(), config.orlicz()?));
    let noise = config.noise_spec();
    Ok(run_units(1, config.trials, |group, trial| {
        let (data_seed, sketch_seed) = trial_seeds(config, group, trial);
        let data = match simulate_regression(config.n, config.d, &noise, &mut data_seed.rng()) {
            Ok(data) => data,
            Err(e) => return vec![row("data", trial, Err(e))],
        };
        let mut rows = vec![row("l1", trial, l1_error(&data)), row("l2", trial, l2_error(&data))];
        for (name, g) in &gs {
            rows.push(row(name.clone(), trial, orlicz_error(g, &data, sketch_seed)));
        }
        rows
    }))
}

/// Shared by `delta_sweep` and `ratio`: one data set per `(scale, trial)`,
/// evaluated for every threshold.
fn sweep<F>(config: &ExperimentConfig, method: &str, eval: F) -> Result<Vec<ResultRow>>
where
    F: Fn(&OrliczFunction, &RegressionData, SeedSpec) -> Result<f64> + Sync,
{
    let mut gs = Vec::with_capacity(config.deltas.len());
    for &delta in &config.deltas {
        gs.push(OrliczFunction::huber(delta)?);
    }
    Ok(run_units(config.scales.len(), config.trials, |group, trial| {
        let scale = config.scales[group];
        let (data_seed, sketch_seed) = trial_seeds(config, group, trial);
        let noise = config.noise_with_scale(scale);
        let data = simulate_regression(config.n, config.d, &noise, &mut data_seed.rng());
        config
            .deltas
            .iter()
            .zip(&gs)
            .map(|(&delta, g)| {
                let value = match &data {
                    Ok(data) => eval(g, data, sketch_seed),
                    Err(e) => Err(Error::InvalidParameter(e.to_string())),
                };
                ResultRow { scale: Some(scale), delta: Some(delta), ..row(method, trial, value) }
            })
            .collect()
    }))
}

fn lowrank(config: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let opts = LowRankOptions { variant: config.variant, restarts: config.restarts, ..Default::default() };
    let stable = LowRankOptions { variant: LowRankVariant::AllStable, ..opts };
    let (k, p) = (config.k, config.p);
    // Trials run one after another; the restarts inside each already fan out.
    let mut rows = Vec::new();
    for trial in 0..config.trials {
        let (data_seed, sketch_seed) = trial_seeds(config, 0, trial);
        let data = match simulate_lowrank(config.n, config.d, k, config.outliers, config.outlier_scale, &mut data_seed.rng()) {
            Ok(data) => data,
            Err(e) => {
                rows.push(row("data", trial, Err(e)));
                continue;
            }
        };
        rows.push(row("pca", trial, pca_baseline(&data.a, k, p).map(|f| f.loss_p)));
        rows.push(row("ours", trial, lp_lowrank(&data.a, k, p, &opts, sketch_seed).map(|f| f.loss_p)));
        if config.compare_stable {
            rows.push(row("all_stable", trial, lp_lowrank(&data.a, k, p, &stable, sketch_seed).map(|f| f.loss_p)));
        }
        rows.push(row("planted", trial, entrywise_loss(&data.u, &data.v, &data.a, p)));
    }
    Ok(rows)
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Groups rows by `(method, scale, delta)` in first-appearance order.
pub fn summarize(rows: &[ResultRow]) -> Summary {
    let mut keys: Vec<(String, Option<f64>, Option<f64>)> = Vec::new();
    let mut values: Vec<Vec<f64>> = Vec::new();
    for r in rows {
        let key = (r.method.clone(), r.scale, r.delta);
        let idx = match keys.iter().position(|k| *k == key) {
            Some(i) => i,
            None => {
                keys.push(key);
                values.push(Vec::new());
                keys.len() - 1
            }
        };
        if let Some(v) = r.value {
            values[idx].push(v);
        }
    }
    let groups: Vec<SummaryGroup> = keys
        .into_iter()
        .zip(values)
        .map(|((method, scale, delta), mut v)| {
            v.sort_by(f64::total_cmp);
            let count = v.len();
            let mean = if count == 0 { f64::NAN } else { v.iter().sum::<f64>() / count as f64 };
            SummaryGroup { method, scale, delta, count, mean, median: median(&v), max: v.last().copied().unwrap_or(f64::NAN) }
        })
        .collect();
    Summary { groups, best_delta: Vec::new() }
}

fn best_deltas(summary: &Summary) -> Vec<BestDelta> {
    let mut best: Vec<BestDelta> = Vec::new();
    for g in &summary.groups {
        let (Some(scale), Some(delta)) = (g.scale, g.delta) else { continue };
        if !g.mean.is_finite() {
            continue;
        }
        match best.iter_mut().find(|b| b.scale == scale) {
            Some(b) if g.mean < b.mean => *b = BestDelta { scale, delta, mean: g.mean },
            Some(_) => {}
            None => best.push(BestDelta { scale, delta, mean: g.mean }),
        }
    }
    best
}

/// Runs the configured experiment and summarizes it.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ResultsDocument> {
    config.validate()?;
    let rows = match config.experiment {
        ExperimentKind::Control => control(config)?,
        ExperimentKind::G15 => g15(config)?,
        ExperimentKind::DeltaSweep => sweep(config, "orlicz", |g, data, seed| orlicz_error(g, data, seed))?,
        ExperimentKind::Ratio => sweep(config, "ratio", |g, data, seed| {
            let out = orlicz_regress(g, &data.a, &data.b, &RegressOptions::default(), seed)?;
            Ok(approximation_ratio(g, &data.a, &data.b, &out.solution, &OracleOptions::default())?.value)
        })?,
        ExperimentKind::Lowrank => lowrank(config)?,
    };
    let mut summary = summarize(&rows);
    if config.experiment == ExperimentKind::DeltaSweep {
        summary.best_delta = best_deltas(&summary);
    }
    Ok(ResultsDocument { config: config.clone(), rows, summary, version: crate::VERSION.to_string() })
}
