use std::io;
use std::path::PathBuf;

use l1dom::Error as CoreError;

/// Failure of a command, carrying the process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("cannot parse {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("{0}")]
    Invalid(String),
    #[error("{0}")]
    Dimension(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } | CliError::Invalid(_) => 2,
            CliError::Dimension(_) => 3,
            CliError::Solver(_) => 4,
            CliError::Io { .. } => 1,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        let msg = e.to_string();
        match e {
            CoreError::DimensionMismatch(_) | CoreError::OddLength(_) | CoreError::NoiseBasisTooNarrow { .. } => {
                CliError::Dimension(msg)
            }
            CoreError::NonFinite(_)
            | CoreError::InvalidInput(_)
            | CoreError::InfeasibleOrdering(_)
            | CoreError::BranchAmbiguity(_)
            | CoreError::CombinatorialLimit(_) => CliError::Invalid(msg),
            CoreError::RankDeficient(_)
            | CoreError::BetaZero(_)
            | CoreError::ZeroColumn(_)
            | CoreError::Singular
            | CoreError::Infeasible(_)
            | CoreError::MaxIterations(_) => CliError::Solver(msg),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
