//! Acceptance criteria, one pass/fail line each. Run with
//! `cargo test -p orlicz-core --test acceptance [-- 3 7 ...]`.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;

use orlicz_core::harness::experiment::{ExperimentConfig, ExperimentKind, NoiseKind};
use orlicz_core::harness::{approximation_ratio, run_experiment, simulate_regression, NoiseSpec, OracleOptions};
use orlicz_core::lowrank::rank_constrained_ls;
use orlicz_core::randgen::{sample_gaussian, sample_generalized_exponential, sample_p_stable};
use orlicz_core::regression::{l1_regress, orlicz_regress, L1Options, RegressOptions};
use orlicz_core::sketch::{apply_sketch, build_orlicz_sketch, SketchMode, SketchOptions};
use orlicz_core::{orlicz_norm, orlicz_norm_gradient, MatrixHandle, OrliczFunction, SeedSpec};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

struct Criterion {
    id: u32,
    name: &'static str,
    budget: Duration,
    run: fn() -> Outcome,
}

fn families() -> Vec<OrliczFunction> {
    vec![
        OrliczFunction::power(1.5).unwrap(),
        OrliczFunction::huber(0.75).unwrap(),
        OrliczFunction::l1l2().unwrap(),
        OrliczFunction::fair(1.0).unwrap(),
        OrliczFunction::l15(0.25).unwrap(),
    ]
}

fn random_vector(rng: &mut impl Rng, max_len: usize) -> Vec<f64> {
    let len = rng.random_range(1..=max_len);
    let scale = 10f64.powf(rng.random_range(-3.0..3.0));
    sample_gaussian(rng, len).into_iter().map(|v| v * scale).collect()
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn norm_matches_lp() -> Outcome {
    let mut rng = SeedSpec::new(101).rng();
    let mut worst = 0.0f64;
    for p in [1.0, 1.5, 2.0] {
        let g = OrliczFunction::power(p).unwrap();
        for _ in 0..1000 {
            let x = random_vector(&mut rng, 200);
            let direct = x.iter().map(|v| v.abs().powf(p)).sum::<f64>().powf(1.0 / p);
            let got = orlicz_norm(&g, &x).unwrap();
            worst = worst.max((got - direct).abs() / direct);
        }
    }
    outcome(worst <= 1e-10, format!("max relative error {worst:.2e}"))
}

fn axioms() -> Outcome {
    let mut rng = SeedSpec::new(102).rng();
    let (mut residual, mut homog, mut triangle) = (0.0f64, 0.0f64, f64::NEG_INFINITY);
    for g in families() {
        for _ in 0..1000 {
            let x = random_vector(&mut rng, 100);
            let y: Vec<f64> = sample_gaussian(&mut rng, x.len()).into_iter().map(|v| v * 10f64.powf(rng.random_range(-3.0..3.0))).collect();
            let nx = orlicz_norm(&g, &x).unwrap();
            let s: f64 = x.iter().map(|v| g.eval(v.abs() / nx)).sum();
            residual = residual.max((s - 1.0).abs());

            let c = rng.random_range(-100.0..100.0);
            let cx: Vec<f64> = x.iter().map(|v| c * v).collect();
            homog = homog.max((orlicz_norm(&g, &cx).unwrap() - c.abs() * nx).abs() / (c.abs() * nx));

            let ny = orlicz_norm(&g, &y).unwrap();
            let sum: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + b).collect();
            let excess = (orlicz_norm(&g, &sum).unwrap() - nx - ny) / (nx + ny);
            triangle = triangle.max(excess);
        }
    }
    outcome(
        residual <= 1e-9 && homog <= 1e-9 && triangle <= 1e-9,
        format!("residual {residual:.2e}, homogeneity {homog:.2e}, triangle excess {triangle:.2e}"),
    )
}

fn ks_statistic(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

fn sampler_fidelity() -> Outcome {
    let mut worst = 0.0f64;
    for (i, g) in families().iter().enumerate() {
        let mut rng = SeedSpec::new(103).child(i as u64).rng();
        let mut s = sample_generalized_exponential(g, &mut rng, 100_000);
        worst = worst.max(ks_statistic(&mut s, |t| 1.0 - (-g.eval(t)).exp()));
    }
    let mut c = sample_p_stable(1.0, &mut SeedSpec::new(104).rng(), 100_000).unwrap();
    c.sort_by(f64::total_cmp);
    let (q1, q3) = (c[25_000], c[75_000]);
    let quartiles_ok = (q1 + 1.0).abs() <= 0.02 && (q3 - 1.0).abs() <= 0.02;
    outcome(worst < 0.01 && quartiles_ok, format!("max KS {worst:.4}, Cauchy quartiles ({q1:.4}, {q3:.4})"))
}

fn contraction() -> Outcome {
    let g = OrliczFunction::huber(0.75).unwrap();
    let n = 1000;
    let x = sample_gaussian(&mut SeedSpec::new(105).rng(), n);
    let norm = orlicz_norm(&g, &x).unwrap();
    let trials = 10_000u64;
    let opts = SketchOptions { mode: SketchMode::DiagonalOnly, ..SketchOptions::default() };
    let inf_norms: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let s = build_orlicz_sketch(&g, n, 1, &opts, &mut SeedSpec::new(106).child(t).rng()).unwrap();
            s.diag_inv().iter().zip(&x).map(|(di, xi)| (di * xi).abs()).fold(0.0, f64::max)
        })
        .collect();
    let mut pass = true;
    let mut parts = Vec::new();
    for alpha in [1.0f64, 2.0, 3.0] {
        let fails = inf_norms.iter().filter(|&&v| v < norm / alpha).count();
        let freq = fails as f64 / trials as f64;
        let bound = (-alpha).exp() + 0.02;
        pass &= freq <= bound;
        parts.push(format!("α={alpha}: {freq:.4} ≤ {bound:.4}"));
    }
    outcome(pass, parts.join(", "))
}

fn exact_recovery() -> Outcome {
    let mut worst = 0.0f64;
    let mut failures = 0;
    for (gi, g) in families().iter().enumerate() {
        let errs: Vec<Option<f64>> = (0..100u64)
            .into_par_iter()
            .map(|t| {
                let seed = SeedSpec::new(107).child(gi as u64).child(t);
                let data = simulate_regression(200, 10, &NoiseSpec::Gaussian { sigma: 0.0 }, &mut seed.child(0).rng()).ok()?;
                let out = orlicz_regress(g, &data.a, &data.b, &RegressOptions::default(), seed.child(1)).ok()?;
                let num = out.solution.iter().zip(&data.x_star).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                let den = data.x_star.iter().map(|v| v * v).sum::<f64>().sqrt();
                Some(num / den)
            })
            .collect();
        for e in errs {
            match e {
                Some(e) if e <= 1e-8 => worst = worst.max(e),
                Some(e) => {
                    worst = worst.max(e);
                    failures += 1;
                }
                None => failures += 1,
            }
        }
    }
    outcome(failures == 0, format!("{failures}/500 misses, max relative error {worst:.2e}"))
}

fn approximation_ratios() -> Outcome {
    let g = OrliczFunction::huber(0.75).unwrap();
    let noise = NoiseSpec::Mixed { sigma: 5.0, fraction: 0.03, scale: 1.0 };
    let ratios: Vec<Option<f64>> = (0..50u64)
        .into_par_iter()
        .map(|t| {
            let seed = SeedSpec::new(108).child(t);
            let data = simulate_regression(200, 10, &noise, &mut seed.child(0).rng()).ok()?;
            let out = orlicz_regress(&g, &data.a, &data.b, &RegressOptions::default(), seed.child(1)).ok()?;
            approximation_ratio(&g, &data.a, &data.b, &out.solution, &OracleOptions::default()).ok().map(|r| r.value)
        })
        .collect();
    let errors = ratios.iter().filter(|r| r.is_none()).count();
    let mut vals: Vec<f64> = ratios.into_iter().flatten().collect();
    let in_range = vals.iter().all(|&r| (1.0 - 1e-6..=3.0).contains(&r));
    let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = vals.iter().copied().fold(0.0, f64::max);
    let med = median(&mut vals);
    outcome(
        errors == 0 && in_range && med <= 1.5,
        format!("ratios in [{lo:.4}, {hi:.4}], median {med:.4}, {errors} failed runs"),
    )
}

fn control_config(noise: NoiseKind, n: usize, d: usize, sigma: f64) -> ExperimentConfig {
    ExperimentConfig { noise, n, d, sigma, seed: 109, ..ExperimentConfig::preset(ExperimentKind::Control) }
}

fn within(lo: f64, v: f64, hi: f64) -> bool {
    v >= lo * 0.9 && v <= hi * 1.1
}

fn regression_trend() -> Outcome {
    let sparse = run_experiment(&control_config(NoiseKind::Sparse, 200, 10, 0.0)).unwrap();
    let (s1, s2, so) = (sparse.summary.mean("l1").unwrap(), sparse.summary.mean("l2").unwrap(), sparse.summary.mean("orlicz").unwrap());
    let sparse_ok = s1 < 1e-3 && within(s1.min(s2), so, s1.max(s2));

    let gauss = run_experiment(&control_config(NoiseKind::Gaussian, 100, 75, 50.0)).unwrap();
    let (g1, g2, go) = (gauss.summary.mean("l1").unwrap(), gauss.summary.mean("l2").unwrap(), gauss.summary.mean("orlicz").unwrap());
    let gauss_ok = within(g2, go, g1);
    outcome(
        sparse_ok && gauss_ok,
        format!("sparse l1/l2/orlicz {s1:.2e}/{s2:.3}/{so:.3}; gaussian {g1:.2}/{g2:.2}/{go:.2}"),
    )
}

fn delta_trend() -> Outcome {
    let config = ExperimentConfig { seed: 110, ..ExperimentConfig::preset(ExperimentKind::DeltaSweep) };
    let doc = run_experiment(&config).unwrap();
    let best = |s: f64| doc.summary.best_delta.iter().find(|b| b.scale == s).map(|b| b.delta);
    let (b0, b2) = (best(0.0), best(2.0));
    let table: Vec<String> = doc.summary.best_delta.iter().map(|b| format!("s={}: δ={} ({:.3})", b.scale, b.delta, b.mean)).collect();
    let pass = matches!((b0, b2), (Some(a), Some(b)) if b < a);
    outcome(pass, table.join(", "))
}

fn g15_trend() -> Outcome {
    let config = ExperimentConfig { seed: 111, ..ExperimentConfig::preset(ExperimentKind::G15) };
    let doc = run_experiment(&config).unwrap();
    let m = |k: &str| doc.summary.mean(k).unwrap_or(f64::NAN);
    let (l15, l2, h75) = (m("l15(0.25)"), m("l2"), m("huber(0.75)"));
    let others: Vec<String> = doc.summary.groups.iter().map(|g| format!("{} {:.2}", g.method, g.mean)).collect();
    outcome(l15 < l2.min(h75), others.join(", "))
}

/// Exact ℓ1 optimum of an overdetermined `t × 2` problem: some optimum
/// interpolates two rows.
fn basis_optimum(m: &DMatrix<f64>, y: &[f64]) -> f64 {
    let t = m.nrows();
    let mut best = f64::INFINITY;
    for i in 0..t {
        for j in i + 1..t {
            let det = m[(i, 0)] * m[(j, 1)] - m[(i, 1)] * m[(j, 0)];
            if det.abs() < 1e-12 {
                continue;
            }
            let x0 = (y[i] * m[(j, 1)] - m[(i, 1)] * y[j]) / det;
            let x1 = (m[(i, 0)] * y[j] - y[i] * m[(j, 0)]) / det;
            let obj: f64 = (0..t).map(|r| (m[(r, 0)] * x0 + m[(r, 1)] * x1 - y[r]).abs()).sum();
            best = best.min(obj);
        }
    }
    best
}

fn l1_equivalence() -> Outcome {
    let mut worst = 0.0f64;
    for t in 0..50u64 {
        let mut rng = SeedSpec::new(112).child(t).rng();
        let m = DMatrix::from_vec(8, 2, sample_gaussian(&mut rng, 16));
        let y = sample_gaussian(&mut rng, 8);
        let fit = l1_regress(&m, &y, &L1Options::default()).unwrap();
        let opt = basis_optimum(&m, &y);
        worst = worst.max((fit.objective - opt).abs() / opt);
    }
    outcome(worst <= 1e-6, format!("max relative gap {worst:.2e}"))
}

fn frob(m: &DMatrix<f64>) -> f64 {
    m.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// `A⁺B` for `A` of full column rank, via Householder QR.
fn lstsq_left(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let qr = a.clone().qr();
    let rhs = qr.q().tr_mul(b);
    qr.r().solve_upper_triangular(&rhs).unwrap()
}

/// Best residual over `restarts` runs of alternating least squares on
/// `min ‖C·X·Y·D − M‖_F`.
fn als(c: &DMatrix<f64>, dm: &DMatrix<f64>, m: &DMatrix<f64>, k: usize, restarts: u64, seed: u64) -> f64 {
    let r = c.ncols();
    (0..restarts)
        .into_par_iter()
        .map(|i| {
            let mut rng = SeedSpec::new(seed).child(i).rng();
            let mut x = DMatrix::from_vec(r, k, sample_gaussian(&mut rng, r * k));
            let mut prev = f64::INFINITY;
            for _ in 0..20_000 {
                // With X fixed: min ‖(CX)·(Y·D) − M‖ is linear in Y.
                let cx = c * &x;
                let w = lstsq_left(&cx, m);
                let y = lstsq_left(&dm.transpose(), &w.transpose()).transpose();
                let yd = &y * dm;
                let w = lstsq_left(&yd.transpose(), &m.transpose()).transpose();
                x = lstsq_left(c, &w);
                let res = frob(&(c * &x * &y * dm - m));
                if prev - res <= 1e-15 * res {
                    return res;
                }
                prev = res;
            }
            prev
        })
        .reduce(|| f64::INFINITY, f64::min)
}

fn rank_constrained() -> Outcome {
    let mut worst = 0.0f64;
    let mut zero_worst = 0.0f64;
    for t in 0..20u64 {
        let mut rng = SeedSpec::new(113).child(t).rng();
        let (n, r, s, d, k) = (rng.random_range(6..10), rng.random_range(3..5), rng.random_range(3..5), rng.random_range(6..10), 2);
        let c = DMatrix::from_vec(n, r, sample_gaussian(&mut rng, n * r));
        let dm = DMatrix::from_vec(s, d, sample_gaussian(&mut rng, s * d));
        let m = DMatrix::from_vec(n, d, sample_gaussian(&mut rng, n * d));
        let (x, y) = rank_constrained_ls(&c, &dm, &m, k).unwrap();
        let ours = frob(&(&c * &x * &y * &dm - &m));
        let best = als(&c, &dm, &m, k, 500, 114 + t);
        worst = worst.max((ours - best).abs() / best);

        let x0 = DMatrix::from_vec(r, k, sample_gaussian(&mut rng, r * k));
        let y0 = DMatrix::from_vec(k, s, sample_gaussian(&mut rng, k * s));
        let target = &c * &x0 * &y0 * &dm;
        let (x, y) = rank_constrained_ls(&c, &dm, &target, k).unwrap();
        zero_worst = zero_worst.max(frob(&(&c * &x * &y * &dm - &target)) / frob(&target));
    }
    outcome(
        worst <= 1e-6 && zero_worst <= 1e-10,
        format!("max relative gap to ALS {worst:.2e}, representable residual {zero_worst:.2e}"),
    )
}

fn lowrank_trend() -> Outcome {
    let config = ExperimentConfig { seed: 115, compare_stable: false, ..ExperimentConfig::preset(ExperimentKind::Lowrank) };
    let doc = run_experiment(&config).unwrap();
    let by = |method: &str| -> Vec<Option<f64>> {
        let mut v = vec![None; config.trials];
        for r in doc.rows.iter().filter(|r| r.method == method) {
            v[r.trial] = r.value;
        }
        v
    };
    let (ours, pca, planted) = (by("ours"), by("pca"), by("planted"));
    let mut beat_pca = 0;
    let mut near_planted = 0;
    for t in 0..config.trials {
        if let (Some(o), Some(p), Some(q)) = (ours[t], pca[t], planted[t]) {
            beat_pca += (o < p) as usize;
            near_planted += (o < 3.0 * q) as usize;
        }
    }
    let trials = config.trials as f64;
    let m = |k: &str| doc.summary.mean(k).unwrap_or(f64::NAN);
    outcome(
        beat_pca as f64 >= 0.8 * trials && near_planted as f64 >= 0.5 * trials,
        format!(
            "ours<pca {beat_pca}/{}, ours<3·planted {near_planted}/{}; means ours {:.0}, pca {:.0}, planted {:.0}",
            config.trials,
            config.trials,
            m("ours"),
            m("pca"),
            m("planted")
        ),
    )
}

fn sparse_matrix(n: usize, d: usize, nnz: usize, seed: u64) -> MatrixHandle {
    let mut rng = SeedSpec::new(seed).rng();
    let picks = rand::seq::index::sample(&mut rng, n * d, nnz).into_vec();
    let vals = sample_gaussian(&mut rng, nnz);
    let triplets = picks.into_iter().zip(vals).map(|(idx, v)| (idx / d, idx % d, v)).collect();
    MatrixHandle::sparse(n, d, triplets).unwrap()
}

fn nnz_scaling() -> Outcome {
    let (n, d) = (200_000, 5);
    let g = OrliczFunction::huber(0.75).unwrap();
    let sketch = build_orlicz_sketch(&g, n, d, &SketchOptions::default(), &mut SeedSpec::new(116).rng()).unwrap();
    let small = sparse_matrix(n, d, 100_000, 117);
    let large = sparse_matrix(n, d, 200_000, 118);
    let time = |a: &MatrixHandle| {
        let _ = apply_sketch(&sketch, a).unwrap();
        let mut runs: Vec<f64> = (0..5)
            .map(|_| {
                let start = Instant::now();
                std::hint::black_box(apply_sketch(&sketch, a).unwrap());
                start.elapsed().as_secs_f64()
            })
            .collect();
        median(&mut runs)
    };
    let (ts, tl) = (time(&small), time(&large));
    let ratio = tl / ts;
    outcome(ratio <= 2.5, format!("{:.3} ms → {:.3} ms, ratio {ratio:.2}", ts * 1e3, tl * 1e3))
}

fn gradient_check() -> Outcome {
    let mut worst = 0.0f64;
    for (i, g) in families().iter().enumerate() {
        let mut rng = SeedSpec::new(119).child(i as u64).rng();
        for _ in 0..100 {
            let r = sample_gaussian(&mut rng, 20);
            let grad = orlicz_norm_gradient(g, &r).unwrap();
            let h = 1e-6 * r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let fd: Vec<f64> = (0..r.len())
                .map(|j| {
                    let mut up = r.clone();
                    let mut down = r.clone();
                    up[j] += h;
                    down[j] -= h;
                    (orlicz_norm(g, &up).unwrap() - orlicz_norm(g, &down).unwrap()) / (2.0 * h)
                })
                .collect();
            let num = grad.iter().zip(&fd).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            let den = grad.iter().map(|v| v * v).sum::<f64>().sqrt();
            worst = worst.max(num / den);
        }
    }
    outcome(worst < 1e-5, format!("max relative error {worst:.2e}"))
}

fn criteria() -> Vec<Criterion> {
    let secs = Duration::from_secs;
    vec![
        Criterion { id: 1, name: "norm matches direct lp", budget: secs(5), run: norm_matches_lp },
        Criterion { id: 2, name: "defining equation and norm axioms", budget: secs(30), run: axioms },
        Criterion { id: 3, name: "sampler fidelity", budget: secs(30), run: sampler_fidelity },
        Criterion { id: 4, name: "per-vector contraction", budget: secs(120), run: contraction },
        Criterion { id: 5, name: "exact recovery", budget: secs(60), run: exact_recovery },
        Criterion { id: 6, name: "approximation ratio", budget: secs(600), run: approximation_ratios },
        Criterion { id: 7, name: "regression error ordering", budget: secs(300), run: regression_trend },
        Criterion { id: 8, name: "best delta shrinks with outlier scale", budget: secs(900), run: delta_trend },
        Criterion { id: 9, name: "l1.5 hybrid beats l2 and huber", budget: secs(600), run: g15_trend },
        Criterion { id: 10, name: "l1 solver matches basis enumeration", budget: secs(10), run: l1_equivalence },
        Criterion { id: 11, name: "rank-constrained least squares", budget: secs(60), run: rank_constrained },
        Criterion { id: 12, name: "low-rank beats PCA", budget: secs(1200), run: lowrank_trend },
        Criterion { id: 13, name: "sketch cost linear in nnz", budget: secs(60), run: nnz_scaling },
        Criterion { id: 14, name: "gradient vs finite differences", budget: secs(10), run: gradient_check },
    ]
}

fn main() -> ExitCode {
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for c in criteria() {
        if !selected.is_empty() && !selected.contains(&c.id) {
            continue;
        }
        let start = Instant::now();
        let out = (c.run)();
        let elapsed = start.elapsed();
        let in_time = elapsed <= c.budget;
        let pass = out.pass && in_time;
        failed += !pass as usize;
        println!(
            "[{}] {:>2} {}: {} ({:.1}s of {}s{})",
            if pass { "PASS" } else { "FAIL" },
            c.id,
            c.name,
            out.detail,
            elapsed.as_secs_f64(),
            c.budget.as_secs(),
            if in_time { "" } else { ", over budget" }
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
