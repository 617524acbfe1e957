use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("norm is not differentiable at the origin")]
    ZeroVector,

    #[error("sketched matrix is rank deficient (rank {rank} < {cols}) after reseeding")]
    RankDeficient { rank: usize, cols: usize },

    #[error("l1 solver diverged after {iterations} iterations")]
    Diverged { iterations: usize },

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonFinite(_) | Error::RankDeficient { .. } | Error::Diverged { .. }
        )
    }
}
