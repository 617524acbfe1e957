//! Orlicz-norm subspace embeddings built from generalized exponential random
//! variables, with the regression and entrywise-ℓp low-rank solvers they
//! enable.
//!
//! The crate is organised bottom-up:
//!
//! - [`orlicz`]: normalized Orlicz functions, the norm, its gradient and
//!   property diagnostics.
//! - [`randgen`]: seeded samplers (generalized exponential, p-stable, Gaussian).
//! - [`matrix`] and [`sketch`]: dense/coordinate matrices and the composed
//!   embedding `Π₂Π₁D⁻¹`, plus the ℓ2→ℓ1 Gaussian map.
//! - [`regression`]: sketched Orlicz regression, ℓ1 regression, combined-loss
//!   regression and LASSO.
//! - [`lowrank`]: entrywise-ℓp low-rank approximation and the PCA baseline.
//! - [`harness`]: data simulation, the gradient-descent oracle, experiment
//!   drivers and CSV/JSON I/O.

pub mod error;
pub mod harness;
pub mod linalg;
pub mod lowrank;
pub mod matrix;
pub mod orlicz;
pub mod randgen;
pub mod regression;
pub mod sketch;

pub use error::{Error, Result};
pub use matrix::MatrixHandle;
pub use orlicz::{make_orlicz, orlicz_norm, orlicz_norm_gradient, verify_property_p, OrliczFunction, OrliczKind};
pub use randgen::SeedSpec;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
