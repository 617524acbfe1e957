use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn orlicz(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_orlicz")).args(args).output().expect("spawn orlicz")
}

fn json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json output")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn norm_of_values() {
    let doc = json(&orlicz(&["norm", "--g", "power(2)", "--values", "3,4", "--gradient"]));
    assert!((doc["norm"].as_f64().unwrap() - 5.0).abs() < 1e-12);
    let g: Vec<f64> = serde_json::from_value(doc["gradient"].clone()).unwrap();
    assert!((g[0] - 0.6).abs() < 1e-12 && (g[1] - 0.8).abs() < 1e-12);
}

#[test]
fn csv_output_lists_entries() {
    let out = orlicz(&["--format", "csv", "norm", "--g", "power(1)", "--values", "1,-2,3"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("key,index,value\n"));
    assert!(text.contains("norm,,6"));
}

#[test]
fn validation_errors_exit_one() {
    assert_eq!(orlicz(&["norm", "--g", "power(3)", "--values", "1"]).status.code(), Some(1));
    assert_eq!(orlicz(&["norm", "--g", "nope", "--values", "1"]).status.code(), Some(1));
    assert_eq!(orlicz(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(orlicz(&["simulate", "regression", "--n", "10", "--d", "3"]).status.code(), Some(1));
}

#[test]
fn simulate_then_regress_recovers_truth() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("data");
    let out = orlicz(&["--seed", "3", "--out", p(&prefix), "simulate", "regression", "--n", "60", "--d", "4"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let a = dir.path().join("data_a.csv");
    let b = dir.path().join("data_b.csv");
    let x: Vec<f64> = fs::read_to_string(dir.path().join("data_x.csv"))
        .unwrap()
        .lines()
        .map(|l| l.parse().unwrap())
        .collect();

    let doc = json(&orlicz(&["regress", "--a", p(&a), "--b", p(&b), "--g", "huber(0.75)", "--path", "full"]));
    let sol: Vec<f64> = serde_json::from_value(doc["solution"].clone()).unwrap();
    for (s, t) in sol.iter().zip(&x) {
        assert!((s - t).abs() <= 1e-8 * (1.0 + t.abs()), "{s} vs {t}");
    }

    let term = format!("power(1):{}:{}", p(&a), p(&b));
    let doc = json(&orlicz(&["combined", "--term", &term, "--term", &term]));
    assert!(doc["loss"].as_f64().unwrap() < 1e-6);

    let doc = json(&orlicz(&["lasso", "--a", p(&a), "--b", p(&b), "--lambda", "0"]));
    assert!(doc["loss"].as_f64().unwrap() < 1e-6);

    let doc = json(&orlicz(&["oracle", "--a", p(&a), "--b", p(&b), "--x-hat", p(&dir.path().join("data_x.csv"))]));
    assert!(doc["loss"].as_f64().unwrap() < 1e-6);
}

#[test]
fn rank_deficient_design_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let rows: String = (0..30).map(|i| format!("{i},{}\n", 2 * i)).collect();
    fs::write(&a, rows).unwrap();
    fs::write(&b, (0..30).map(|i| format!("{}\n", i % 7)).collect::<String>()).unwrap();
    let out = orlicz(&["regress", "--a", p(&a), "--b", p(&b), "--path", "full"]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn sparse_input_with_explicit_dims() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let mut text = String::from("i,j,value\n");
    for i in 0..20 {
        text.push_str(&format!("{i},{},1\n", i % 2));
    }
    fs::write(&a, text).unwrap();
    fs::write(&b, (0..20).map(|i| format!("{}\n", if i % 2 == 0 { 2.0 } else { -1.0 })).collect::<String>()).unwrap();
    let doc = json(&orlicz(&["regress", "--a", p(&a), "--a-format", "sparse-csv", "--dims", "20,2", "--b", p(&b)]));
    let sol: Vec<f64> = serde_json::from_value(doc["solution"].clone()).unwrap();
    assert!((sol[0] - 2.0).abs() < 1e-9 && (sol[1] + 1.0).abs() < 1e-9, "{sol:?}");
}

#[test]
fn lowrank_writes_factors() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("lr");
    let out = orlicz(&["--seed", "1", "--out", p(&prefix), "simulate", "lowrank", "--n", "20", "--d", "15", "--k", "2"]);
    assert!(out.status.success());
    let a = dir.path().join("lr_a.csv");
    let fit = dir.path().join("fit");
    let out = orlicz(&["--out", p(&fit), "lowrank", "--a", p(&a), "--k", "2", "--restarts", "3", "--pca"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("fit.json")).unwrap()).unwrap();
    assert!(doc["loss_p"].as_f64().unwrap() < 1e-6);
    assert_eq!(fs::read_to_string(dir.path().join("fit_u.csv")).unwrap().lines().count(), 20);
    assert_eq!(fs::read_to_string(dir.path().join("fit_v.csv")).unwrap().lines().count(), 2);
}

#[test]
fn experiment_config_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "experiment = \"control\"\nn = 40\nd = 3\ntrials = 3\nseed = 9\n").unwrap();
    let first = dir.path().join("one");
    let second = dir.path().join("two");
    for (prefix, threads) in [(&first, "1"), (&second, "3")] {
        let out = orlicz(&["--threads", threads, "--out", p(prefix), "experiment", "--config", p(&cfg)]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let rows = |prefix: &Path| fs::read_to_string(format!("{}_rows.csv", p(prefix))).unwrap();
    assert_eq!(rows(&first), rows(&second));
    assert_eq!(rows(&first).lines().count(), 1 + 3 * 3);
    let doc: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(format!("{}.json", p(&first))).unwrap()).unwrap();
    for key in ["config", "rows", "summary", "version"] {
        assert!(doc.get(key).is_some(), "missing {key}");
    }

    fs::write(&cfg, "experiment = \"control\"\nbogus = 1\n").unwrap();
    assert_eq!(orlicz(&["experiment", "--config", p(&cfg)]).status.code(), Some(1));
}
