use thiserror::Error;

use crate::dyson::DysonSeries;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("operands live on different grids")]
    GridMismatch,

    #[error("expected a state in {expected} representation, got {found}")]
    RepresentationMismatch {
        expected: &'static str,
        found: &'static str,
    },

    #[error("kernel matrix has non-finite entries")]
    NonFinite,

    #[error("invalid delta configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid mollifier: {0}")]
    InvalidMollifier(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The Dyson sum did not reach the requested tolerance with a certified
    /// geometric tail. The partial series is returned for inspection.
    #[error(
        "Dyson tail not certified after {} orders (last Schur bound {:.3e})",
        .0.orders.len(),
        .0.schur_bounds.last().copied().unwrap_or(f64::NAN)
    )]
    TailNotCertified(Box<DysonSeries>),

    #[error("linear algebra failure: {0}")]
    Linalg(#[from] ndarray_linalg::error::LinalgError),

    /// A computed object violates a bound it must satisfy.
    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
