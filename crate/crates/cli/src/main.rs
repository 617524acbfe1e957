//! Command-line front end for Orlicz-norm sketching, regression and
//! low-rank approximation.

use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use orlicz_core::harness::experiment::ExperimentConfig;
use orlicz_core::harness::io::{self as hio, load_vector, save_vector, MatrixFormat};
use orlicz_core::harness::{oracle_solve, run_experiment, simulate_lowrank, simulate_regression, ExperimentKind, NoiseSpec, OracleOptions};
use orlicz_core::harness::oracle::ratio_from_losses;
use orlicz_core::lowrank::{lp_lowrank, pca_baseline, LowRankFactors, LowRankOptions, LowRankVariant};
use orlicz_core::regression::{combined_regress, lasso, orlicz_loss, orlicz_regress, CombinedTerm, RegressOptions, RegressionOutput, SketchPath};
use orlicz_core::{make_orlicz, orlicz_norm, orlicz_norm_gradient, Error, MatrixHandle, OrliczFunction, OrliczKind, SeedSpec};

#[derive(Parser)]
#[command(name = "orlicz", version, about = "Orlicz-norm sketching, regression and low-rank approximation")]
struct Cli {
    /// Master seed for every random draw.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Output file (or file prefix for commands writing several files).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Orlicz norm (and optionally its gradient) of a vector.
    Norm {
        #[arg(long, default_value = "huber(0.75)")]
        g: String,
        /// Single-column CSV file.
        #[arg(long, conflicts_with = "values")]
        vector: Option<PathBuf>,
        /// Comma-separated entries.
        #[arg(long, allow_hyphen_values = true)]
        values: Option<String>,
        #[arg(long)]
        gradient: bool,
    },
    /// Sketched Orlicz-norm regression.
    Regress {
        #[command(flatten)]
        problem: Problem,
        #[arg(long, default_value = "huber(0.75)")]
        g: String,
        #[command(flatten)]
        sketch: SketchArgs,
    },
    /// Sum of several Orlicz-norm losses sharing one unknown.
    Combined {
        /// `G:A.csv:b.csv`; repeat once per term.
        #[arg(long = "term", required = true)]
        terms: Vec<String>,
        #[command(flatten)]
        sketch: SketchArgs,
    },
    /// `min ‖Ax − b‖₂ + λ‖x‖₁`.
    Lasso {
        #[command(flatten)]
        problem: Problem,
        #[arg(long)]
        lambda: f64,
        #[command(flatten)]
        sketch: SketchArgs,
    },
    /// Entrywise-ℓp rank-k approximation; writes `<out>_u.csv` and `<out>_v.csv`.
    Lowrank {
        #[command(flatten)]
        matrix: MatrixArgs,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 1.0)]
        p: f64,
        #[arg(long, value_enum, default_value_t = VariantArg::Experimental)]
        variant: VariantArg,
        #[arg(long, default_value_t = 1)]
        restarts: usize,
        /// Also report the truncated-SVD baseline.
        #[arg(long)]
        pca: bool,
    },
    /// Synthetic data; writes `<out>_a.csv`, `<out>_b.csv`, `<out>_x.csv`
    /// (regression) or `<out>_a.csv` (low rank).
    Simulate {
        #[command(subcommand)]
        kind: SimulateKind,
    },
    /// Gradient-descent reference solution and, given `--x-hat`, the
    /// approximation ratio.
    Oracle {
        #[command(flatten)]
        problem: Problem,
        #[arg(long, default_value = "huber(0.75)")]
        g: String,
        #[arg(long)]
        x_hat: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-3)]
        lr: f64,
        /// Stop once a full step gains less than this.
        #[arg(long, default_value_t = 1e-7)]
        stop: f64,
        #[arg(long, default_value_t = 100_000)]
        max_iter: usize,
    },
    /// Run a configured experiment; writes `<out>.json`, `<out>_rows.csv`
    /// and `<out>_summary.csv` when `--out` is given.
    Experiment {
        /// TOML file of ExperimentConfig fields.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Preset to run when no config file is given.
        #[arg(long, value_enum)]
        preset: Option<PresetArg>,
        /// Override the trial count.
        #[arg(long)]
        trials: Option<usize>,
    },
}

#[derive(Subcommand)]
enum SimulateKind {
    Regression {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 0.0)]
        sigma: f64,
        #[arg(long, default_value_t = 0.0)]
        fraction: f64,
        #[arg(long, default_value_t = 0.0)]
        scale: f64,
    },
    Lowrank {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        outliers: usize,
        #[arg(long, default_value_t = 100.0)]
        outlier_scale: f64,
    },
}

#[derive(Args)]
struct MatrixArgs {
    /// Matrix file.
    #[arg(long)]
    a: PathBuf,
    #[arg(long, value_enum, default_value_t = FormatArg::DenseCsv)]
    a_format: FormatArg,
    /// `rows,cols` for sparse files.
    #[arg(long)]
    dims: Option<String>,
}

#[derive(Args)]
struct Problem {
    #[command(flatten)]
    matrix: MatrixArgs,
    /// Single-column CSV right-hand side.
    #[arg(long)]
    b: PathBuf,
}

#[derive(Args)]
struct SketchArgs {
    #[arg(long, value_enum, default_value_t = PathArg::Auto)]
    path: PathArg,
    #[arg(long, default_value_t = 10.0)]
    c1: f64,
    #[arg(long, default_value_t = 20.0)]
    c2: f64,
    #[arg(long, default_value_t = 8.0)]
    c3: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    DenseCsv,
    SparseCsv,
}

#[derive(Clone, Copy, ValueEnum)]
enum PathArg {
    Auto,
    Full,
    Passthrough,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Theoretical,
    Experimental,
    AllStable,
}

#[derive(Clone, Copy, ValueEnum)]
enum PresetArg {
    Control,
    DeltaSweep,
    G15,
    Lowrank,
    Ratio,
}

impl MatrixArgs {
    fn load(&self) -> orlicz_core::Result<MatrixHandle> {
        let dims = self.dims.as_deref().map(parse_dims).transpose()?;
        let format = match self.a_format {
            FormatArg::DenseCsv => MatrixFormat::DenseCsv,
            FormatArg::SparseCsv => MatrixFormat::SparseCsv,
        };
        hio::load_matrix(&self.a, format, dims)
    }
}

impl SketchArgs {
    fn options(&self) -> RegressOptions {
        let path = match self.path {
            PathArg::Auto => SketchPath::Auto,
            PathArg::Full => SketchPath::Full,
            PathArg::Passthrough => SketchPath::Passthrough,
        };
        RegressOptions { c1: self.c1, c2: self.c2, c3: self.c3, path, ..RegressOptions::default() }
    }
}

fn parse_dims(s: &str) -> orlicz_core::Result<(usize, usize)> {
    let bad = || Error::InvalidParameter(format!("dims must look like ROWS,COLS, got {s:?}"));
    let (r, c) = s.split_once(',').ok_or_else(bad)?;
    Ok((r.trim().parse().map_err(|_| bad())?, c.trim().parse().map_err(|_| bad())?))
}

fn orlicz(spec: &str) -> orlicz_core::Result<OrliczFunction> {
    make_orlicz(spec.parse::<OrliczKind>()?)
}

fn parse_values(s: &str) -> orlicz_core::Result<Vec<f64>> {
    s.split(',')
        .map(|v| v.trim().parse().map_err(|_| Error::InvalidParameter(format!("not a number: {v:?}"))))
        .collect()
}

/// Where single-document output goes.
fn sink(out: Option<&Path>) -> orlicz_core::Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(File::create(p)?),
        None => Box::new(io::stdout().lock()),
    })
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn require_out(out: Option<&Path>, what: &str) -> orlicz_core::Result<PathBuf> {
    out.map(Path::to_path_buf)
        .ok_or_else(|| Error::InvalidParameter(format!("{what} needs --out PREFIX")))
}

/// Scalars and vectors as JSON, or as `key,value` / one-column CSV.
fn emit(cli: &Cli, doc: Value) -> orlicz_core::Result<()> {
    let mut w = sink(cli.out.as_deref())?;
    match cli.format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut w, &doc)?;
            writeln!(w)?;
        }
        Format::Csv => {
            writeln!(w, "key,index,value")?;
            if let Value::Object(map) = &doc {
                for (k, v) in map {
                    match v {
                        Value::Array(items) => {
                            for (i, item) in items.iter().enumerate() {
                                writeln!(w, "{k},{i},{item}")?;
                            }
                        }
                        Value::Object(_) => writeln!(w, "{k},,\"{}\"", v.to_string().replace('"', "\"\""))?,
                        other => writeln!(w, "{k},,{other}")?,
                    }
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn regression_doc(out: &RegressionOutput) -> Value {
    json!({
        "solution": out.solution,
        "loss": out.loss,
        "sketch_dims": out.sketch_dims,
        "seed": out.seed,
        "wall_time": out.wall_time,
    })
}

fn lowrank_doc(f: &LowRankFactors) -> Value {
    json!({ "k": f.k, "p": f.p, "loss_p": f.loss_p, "seed": f.seed })
}

fn run(cli: &Cli) -> orlicz_core::Result<()> {
    let seed = SeedSpec::new(cli.seed);
    match &cli.command {
        Command::Norm { g, vector, values, gradient } => {
            let g = orlicz(g)?;
            let x = match (vector, values) {
                (Some(p), _) => load_vector(p)?,
                (None, Some(s)) => parse_values(s)?,
                (None, None) => return Err(Error::InvalidParameter("give --vector or --values".into())),
            };
            let mut doc = json!({ "norm": orlicz_norm(&g, &x)? });
            if *gradient {
                doc["gradient"] = json!(orlicz_norm_gradient(&g, &x)?);
            }
            emit(cli, doc)
        }
        Command::Regress { problem, g, sketch } => {
            let (a, b) = (problem.matrix.load()?, load_vector(&problem.b)?);
            let out = orlicz_regress(&orlicz(g)?, &a, &b, &sketch.options(), seed)?;
            emit(cli, regression_doc(&out))
        }
        Command::Combined { terms, sketch } => {
            let terms = terms
                .iter()
                .map(|t| {
                    let parts: Vec<&str> = t.splitn(3, ':').collect();
                    let [g, a, b] = parts[..] else {
                        return Err(Error::InvalidParameter(format!("term must look like G:A.csv:b.csv, got {t:?}")));
                    };
                    Ok(CombinedTerm {
                        g: orlicz(g)?,
                        a: hio::load_matrix(Path::new(a), MatrixFormat::DenseCsv, None)?,
                        b: load_vector(Path::new(b))?,
                    })
                })
                .collect::<orlicz_core::Result<Vec<_>>>()?;
            let out = combined_regress(&terms, &sketch.options(), seed)?;
            emit(cli, regression_doc(&out))
        }
        Command::Lasso { problem, lambda, sketch } => {
            let (a, b) = (problem.matrix.load()?, load_vector(&problem.b)?);
            let out = lasso(&a, &b, *lambda, &sketch.options(), seed)?;
            emit(cli, regression_doc(&out))
        }
        Command::Lowrank { matrix, k, p, variant, restarts, pca } => {
            let a = matrix.load()?;
            let variant = match variant {
                VariantArg::Theoretical => LowRankVariant::Theoretical,
                VariantArg::Experimental => LowRankVariant::Experimental,
                VariantArg::AllStable => LowRankVariant::AllStable,
            };
            let opts = LowRankOptions { variant, restarts: *restarts, ..LowRankOptions::default() };
            let f = lp_lowrank(&a, *k, *p, &opts, seed)?;
            let mut doc = lowrank_doc(&f);
            if *pca {
                doc["pca_loss_p"] = json!(pca_baseline(&a, *k, *p)?.loss_p);
            }
            if let Some(prefix) = &cli.out {
                hio::save_matrix(&with_suffix(prefix, "_u.csv"), &MatrixHandle::dense(f.u.clone()), MatrixFormat::DenseCsv)?;
                hio::save_matrix(&with_suffix(prefix, "_v.csv"), &MatrixHandle::dense(f.v.clone()), MatrixFormat::DenseCsv)?;
                let mut w = File::create(with_suffix(prefix, ".json"))?;
                serde_json::to_writer_pretty(&mut w, &doc)?;
                writeln!(w)?;
                Ok(())
            } else {
                emit(cli, doc)
            }
        }
        Command::Simulate { kind } => {
            let prefix = require_out(cli.out.as_deref(), "simulate")?;
            let mut rng = seed.rng();
            match *kind {
                SimulateKind::Regression { n, d, sigma, fraction, scale } => {
                    let noise = NoiseSpec::Mixed { sigma, fraction, scale };
                    let data = simulate_regression(n, d, &noise, &mut rng)?;
                    hio::save_matrix(&with_suffix(&prefix, "_a.csv"), &data.a, MatrixFormat::DenseCsv)?;
                    save_vector(&with_suffix(&prefix, "_b.csv"), &data.b)?;
                    save_vector(&with_suffix(&prefix, "_x.csv"), &data.x_star)?;
                }
                SimulateKind::Lowrank { n, d, k, outliers, outlier_scale } => {
                    let data = simulate_lowrank(n, d, k, outliers, outlier_scale, &mut rng)?;
                    hio::save_matrix(&with_suffix(&prefix, "_a.csv"), &data.a, MatrixFormat::DenseCsv)?;
                }
            }
            Ok(())
        }
        Command::Oracle { problem, g, x_hat, lr, stop, max_iter } => {
            let (a, b) = (problem.matrix.load()?, load_vector(&problem.b)?);
            let g = orlicz(g)?;
            let opts = OracleOptions { lr: *lr, stop: *stop, max_iter: *max_iter, ..OracleOptions::default() };
            let res = oracle_solve(&g, &a, &b, &opts)?;
            let mut doc = json!({
                "solution": res.x,
                "loss": res.loss,
                "iterations": res.iterations,
                "converged": res.converged,
            });
            if let Some(path) = x_hat {
                let x = load_vector(path)?;
                let ratio = ratio_from_losses(orlicz_loss(&g, &a, &b, &x)?, res.loss);
                doc["ratio"] = json!(ratio.value);
                doc["ratio_raw"] = json!(ratio.raw);
            }
            emit(cli, doc)
        }
        Command::Experiment { config, preset, trials } => {
            let mut cfg = match (config, preset) {
                (Some(path), _) => hio::load_config(path)?,
                (None, Some(p)) => ExperimentConfig::preset(match p {
                    PresetArg::Control => ExperimentKind::Control,
                    PresetArg::DeltaSweep => ExperimentKind::DeltaSweep,
                    PresetArg::G15 => ExperimentKind::G15,
                    PresetArg::Lowrank => ExperimentKind::Lowrank,
                    PresetArg::Ratio => ExperimentKind::Ratio,
                }),
                (None, None) => return Err(Error::InvalidParameter("give --config or --preset".into())),
            };
            if config.is_none() || cli.seed != 0 {
                cfg.seed = cli.seed;
            }
            if let Some(t) = trials {
                cfg.trials = *t;
            }
            if let Some(out) = &cli.out {
                cfg.output = Some(out.to_string_lossy().into_owned());
            }
            cfg.validate()?;
            let doc = run_experiment(&cfg)?;
            match cfg.output.as_deref() {
                Some(prefix) => {
                    let prefix = Path::new(prefix);
                    hio::write_results_json(&doc, File::create(with_suffix(prefix, ".json"))?)?;
                    hio::write_rows_csv(&doc, File::create(with_suffix(prefix, "_rows.csv"))?)?;
                    hio::write_summary_csv(&doc, File::create(with_suffix(prefix, "_summary.csv"))?)?;
                }
                None => match cli.format {
                    Format::Json => hio::write_results_json(&doc, io::stdout().lock())?,
                    Format::Csv => hio::write_summary_csv(&doc, io::stdout().lock())?,
                },
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 2 } else { 1 })
        }
    }
}
