use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not symmetric: |a[{row}][{col}] - a[{col}][{row}]| = {deviation:e}")]
    NotSymmetric {
        row: usize,
        col: usize,
        deviation: f64,
    },

    #[error("no convergence after {iterations} iterations (best estimate {estimate:?})")]
    NoConvergence {
        iterations: usize,
        estimate: Option<f64>,
    },

    #[error("degenerate spectrum: {0}")]
    DegenerateSpectrum(String),

    #[error("invalid spectral bounds ({lambda_min}, {lambda_max})")]
    InvalidBounds { lambda_min: f64, lambda_max: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("size limit exceeded: {what} = {value} (max {max})")]
    SizeLimit {
        what: &'static str,
        value: usize,
        max: usize,
    },

    #[error("non-finite value encountered at iteration {iteration}")]
    NonFinite { iteration: usize },

    #[error("matrix is singular (|det| = {det:e})")]
    SingularMatrix { det: f64 },

    #[error("negative derivative {value} at component {index}")]
    NegativeDerivative { index: usize, value: f64 },

    #[error("zero diagonal entry at row {index}")]
    ZeroDiagonal { index: usize },

    #[error("step size {gamma} exceeds 1/L = {limit}")]
    StepTooLarge { gamma: f64, limit: f64 },

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),
}
