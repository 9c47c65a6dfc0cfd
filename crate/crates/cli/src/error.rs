use chaintrunc_core::Error as CoreError;
use thiserror::Error;

/// Failures of a CLI command, each with its process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("i/o error: {0}")]
    Io(String),
    #[error("invalid configuration: {0}")]
    Validation(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("unstable or non-oscillatory dynamics: {0}")]
    Unstable(String),
    #[error("all {0} sweep cells failed")]
    SweepFailed(usize),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Validation(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Unstable(_) => 4,
            CliError::SweepFailed(_) => 5,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        let msg = e.to_string();
        match e {
            CoreError::UnstableMode { .. }
            | CoreError::ComplexResolvent { .. }
            | CoreError::DegenerateResolvent { .. } => CliError::Unstable(msg),
            CoreError::Breakdown { .. }
            | CoreError::ToleranceNotReached { .. }
            | CoreError::GridTooCoarse { .. }
            | CoreError::DegenerateFrequencies { .. } => CliError::Numerical(msg),
            CoreError::EmptyModel
            | CoreError::LengthMismatch { .. }
            | CoreError::NonFinite { .. }
            | CoreError::NonincreasingSpectrum { .. }
            | CoreError::NonpositiveParameter { .. }
            | CoreError::IndexOutOfRange { .. }
            | CoreError::DimensionMismatch { .. }
            | CoreError::GridMismatch
            | CoreError::InvalidGrid(_) => CliError::Validation(msg),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
