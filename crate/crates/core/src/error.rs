use thiserror::Error;

/// Errors raised by the model constructors and numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("model must contain at least one bath oscillator")]
    EmptyModel,

    #[error("length mismatch: {what} has {found} entries, expected {expected}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("non-finite value in {what}")]
    NonFinite { what: &'static str },

    #[error("bath spectrum must be strictly increasing (omega[{index}] = {value} is not above its predecessor)")]
    NonincreasingSpectrum { index: usize, value: f64 },

    #[error("{what} must be strictly positive, got {value}")]
    NonpositiveParameter { what: &'static str, value: f64 },

    #[error(
        "Lanczos breakdown at step {step}: coupling {coupling:e} below threshold {threshold:e}"
    )]
    Breakdown {
        step: usize,
        coupling: f64,
        threshold: f64,
    },

    #[error("index {index} out of range (maximum {max})")]
    IndexOutOfRange { index: usize, max: usize },

    #[error("dimension mismatch: {what}")]
    DimensionMismatch { what: String },

    #[error("frequencies {a} and {b} coincide; closed-form kernel needs distinct frequencies")]
    DegenerateFrequencies { a: f64, b: f64 },

    #[error("quadrature did not reach tolerance {tol:e} within the refinement cap")]
    ToleranceNotReached { tol: f64 },

    #[error("normal mode with non-positive eigenvalue {eigenvalue:e}; system is not oscillatory")]
    UnstableMode { eigenvalue: f64 },

    #[error("resolvent frequency mu2^2 = {mu2_sq:e} is not positive; requires Omega^2 * Omega_1^2 > D^2")]
    ComplexResolvent { mu2_sq: f64 },

    #[error(
        "resolvent frequencies coincide (Delta = {delta:e}); closed Volterra solution is singular"
    )]
    DegenerateResolvent { delta: f64 },

    #[error(
        "sampling grid too coarse: estimated interpolation error {estimate:e} exceeds {limit:e}"
    )]
    GridTooCoarse { estimate: f64, limit: f64 },

    #[error("time grids differ")]
    GridMismatch,

    #[error("invalid time grid: {0}")]
    InvalidGrid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
