//! Data simulation, the reference solver, experiment drivers and file I/O.

pub mod experiment;
pub mod io;
pub mod oracle;
pub mod simulate;

pub use experiment::{run_experiment, ExperimentConfig, ExperimentKind, NoiseKind, ResultsDocument};
pub use io::{load_matrix, save_matrix, MatrixFormat};
pub use oracle::{approximation_ratio, oracle_solve, OracleOptions, OracleResult, Ratio};
pub use simulate::{simulate_lowrank, simulate_regression, LowRankData, NoiseSpec, RegressionData};
