use proptest::prelude::*;

use super::{orlicz_norm, orlicz_norm_gradient, OrliczFunction};

fn families() -> Vec<OrliczFunction> {
    vec![
        OrliczFunction::power(1.5).unwrap(),
        OrliczFunction::huber(0.75).unwrap(),
        OrliczFunction::l1l2().unwrap(),
        OrliczFunction::fair(1.0).unwrap(),
        OrliczFunction::l15(0.25).unwrap(),
    ]
}

fn vector() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-100.0f64..100.0, 1..40).prop_filter("nonzero", |v| v.iter().any(|x| x.abs() > 1e-3))
}

/// Plain bisection for `Σ f(|xᵢ|/α) = 1`, with `f` any increasing loss.
fn bisect_norm(f: impl Fn(f64) -> f64, x: &[f64]) -> f64 {
    let total = |a: f64| x.iter().map(|v| f(v.abs() / a)).sum::<f64>();
    let (mut lo, mut hi) = (1e-12, 1.0);
    while total(hi) > 1.0 {
        hi *= 2.0;
    }
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if total(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn homogeneity(x in vector(), c in -50.0f64..50.0) {
        for g in families() {
            let base = orlicz_norm(&g, &x).unwrap();
            let scaled: Vec<f64> = x.iter().map(|v| c * v).collect();
            let lhs = orlicz_norm(&g, &scaled).unwrap();
            prop_assert!((lhs - c.abs() * base).abs() <= 1e-9 * c.abs() * base + 1e-300, "{}: {lhs} vs {}", g.kind(), c.abs() * base);
        }
    }

    #[test]
    fn triangle_inequality(pair in (1usize..40).prop_flat_map(|n| (prop::collection::vec(-100.0f64..100.0, n), prop::collection::vec(-100.0f64..100.0, n)))) {
        let (x, y) = pair;
        let sum: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + b).collect();
        for g in families() {
            let lhs = orlicz_norm(&g, &sum).unwrap();
            let rhs = orlicz_norm(&g, &x).unwrap() + orlicz_norm(&g, &y).unwrap();
            prop_assert!(lhs <= rhs + 1e-9 * rhs.max(1.0), "{}: {lhs} > {rhs}", g.kind());
        }
    }

    #[test]
    fn sandwich_between_l2_and_l1(x in vector()) {
        for g in families() {
            let norm = orlicz_norm(&g, &x).unwrap();
            let l1: f64 = x.iter().map(|v| v.abs()).sum();
            let l2 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            let cg = g.growth_constant() * 1.01;
            prop_assert!(norm <= l1 * (1.0 + 1e-12), "{}: {norm} > {l1}", g.kind());
            prop_assert!(l2 / cg.sqrt() <= norm * (1.0 + 1e-12), "{}: {} > {norm}", g.kind(), l2 / cg.sqrt());
        }
    }

    #[test]
    fn defining_equation_residual(x in vector()) {
        for g in families() {
            let alpha = orlicz_norm(&g, &x).unwrap();
            let s: f64 = x.iter().map(|v| g.eval(v.abs() / alpha)).sum();
            prop_assert!((s - 1.0).abs() <= 1e-9, "{}: residual {}", g.kind(), s - 1.0);
        }
    }

    /// The raw Huber loss and its normalization define norms that differ by
    /// exactly the normalizer.
    #[test]
    fn raw_huber_norm_is_rescaled(x in vector()) {
        let delta = 0.75;
        let g = OrliczFunction::huber(delta).unwrap();
        let raw = |t: f64| if t <= delta { t * t / 2.0 } else { delta * (t - delta / 2.0) };
        let normalizer = 1.0 / delta + delta / 2.0;
        let raw_norm = bisect_norm(raw, &x);
        let lhs = orlicz_norm(&g, &x).unwrap() / normalizer;
        prop_assert!((lhs - raw_norm).abs() <= 1e-9 * raw_norm, "{lhs} vs {raw_norm}");
    }

    #[test]
    fn gradient_is_scale_invariant(x in vector(), c in 0.1f64..20.0) {
        for g in families() {
            let g1 = orlicz_norm_gradient(&g, &x).unwrap();
            let scaled: Vec<f64> = x.iter().map(|v| c * v).collect();
            let g2 = orlicz_norm_gradient(&g, &scaled).unwrap();
            for (a, b) in g1.iter().zip(&g2) {
                prop_assert!((a - b).abs() <= 1e-8 * (1.0 + a.abs()), "{}: {a} vs {b}", g.kind());
            }
        }
    }

    /// Euler's identity for a 1-homogeneous function: `⟨∇‖r‖, r⟩ = ‖r‖`.
    #[test]
    fn gradient_satisfies_euler_identity(x in vector()) {
        for g in families() {
            let grad = orlicz_norm_gradient(&g, &x).unwrap();
            let dot: f64 = grad.iter().zip(&x).map(|(a, b)| a * b).sum();
            let norm = orlicz_norm(&g, &x).unwrap();
            prop_assert!((dot - norm).abs() <= 1e-9 * norm, "{}: {dot} vs {norm}", g.kind());
        }
    }
}
