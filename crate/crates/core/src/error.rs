use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("node count {0} must be even and at least 8")]
    BadNodeCount(usize),
    #[error("sample count {0} must be even")]
    OddLength(usize),
    #[error("invalid curve: {0}")]
    InvalidCurve(String),
    #[error("curve is clockwise (signed area {0}); counterclockwise orientation is required")]
    Clockwise(f64),
    #[error("degenerate parametrization: min |Z'| = {0:e}")]
    Degenerate(f64),
    #[error("resampling factor must exceed 1, got {0}")]
    BadFactor(f64),
    #[error("density has {got} samples, curve has {expected} nodes")]
    LengthMismatch { expected: usize, got: usize },
    #[error("exterior anchor {0}")]
    Anchor(String),
    #[error("target batch side does not match the requested evaluation")]
    SideMismatch,
    #[error("linear solve residual {residual:e} exceeds {tolerance:e}")]
    Residual { residual: f64, tolerance: f64 },
    #[error("GMRES did not converge in {iterations} iterations (relative residual {residual:e})")]
    Gmres { iterations: usize, residual: f64 },
    #[error("unsupported boundary value problem: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
