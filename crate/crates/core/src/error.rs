use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

/// Errors raised by the diagnostics library.
///
/// Index-carrying variants use zero-based indices; front ends add one when
/// they print station numbers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is singular (|det| = {det:e})")]
    SingularMatrix { det: f64 },
    #[error("dimension {dim} exceeds the exhaustive-enumeration bound {max}")]
    DimensionTooLarge { dim: usize, max: usize },
    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },
    #[error("covariance matrix is not positive definite")]
    InvalidSigma,
    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },
    #[error("reflection matrix R is singular")]
    SingularR,
    #[error("pair ({i}, {j}) is degenerate: c_ij = {c:e}")]
    DegeneratePair { i: usize, j: usize, c: f64 },
    #[error("slice of pair ({i}, {j}) is not an ellipse")]
    EmptySlice { i: usize, j: usize },
    #[error("diagonal entry {index} of R is zero")]
    ZeroDiagonalR { index: usize },
    #[error("theta[{index}] is outside the domain theta < alpha")]
    DomainError { index: usize },
    #[error("reflection matrix R is not a P-matrix")]
    NotPMatrix,
    #[error("invalid tandem spec: {0}")]
    InvalidSpec(String),
    #[error("tandem network does not satisfy the product-form condition")]
    NotProductForm,
    #[error("conjectured path is infeasible: {0}")]
    InfeasiblePath(String),
    #[error("Lemke's algorithm terminated on a secondary ray for w = {w:?}")]
    LcpRayTermination { w: Vec<f64> },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("at least {min} slice samples are required, got {got}")]
    TooFewSamples { min: usize, got: usize },
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("I/O error: {0}")]
    Io(String),
}
