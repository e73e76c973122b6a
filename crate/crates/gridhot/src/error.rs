//! Error type shared by all modules, with a stable exit-code mapping for the CLI.

use crate::grid::Cell;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid coordinate: {0}")]
    InvalidCoordinate(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("insufficient targets: need {needed}, have {available}")]
    InsufficientTargets { needed: usize, available: usize },

    #[error("undefined ratio: {0}")]
    UndefinedRatio(String),

    #[error("no elbow in the radius curve: {0}")]
    NoElbow(String),

    #[error("inconsistent input: {0}")]
    InconsistentInput(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("candidates exhausted at level {level}: requested {requested}, picked {picked}")]
    Exhausted {
        level: usize,
        requested: usize,
        picked: usize,
    },

    #[error("total attraction is zero at level {level} with {alive} candidates alive")]
    ZeroAttraction { level: usize, alive: usize },

    #[error("singular distance: point coincides with hotspot cell ({},{})", .0.row, .0.col)]
    SingularDistance(Cell),

    #[error("infeasible synthetic-city spec: {0}")]
    Infeasible(String),

    #[error("manifest mismatch: {0}")]
    ManifestMismatch(String),

    #[error("parse error at {path}:{line}: {message}")]
    Parse {
        path: String,
        line: u64,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// CLI exit code: 0 success, 2 input error, 3 precondition error,
    /// 4 exhaustion / partial simulation.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidCoordinate(_)
            | Error::InvalidInput(_)
            | Error::Infeasible(_)
            | Error::ManifestMismatch(_)
            | Error::Parse { .. }
            | Error::Io(_)
            | Error::Json(_) => 2,
            Error::InsufficientTargets { .. }
            | Error::UndefinedRatio(_)
            | Error::NoElbow(_)
            | Error::InconsistentInput(_)
            | Error::Precondition(_)
            | Error::SingularDistance(_) => 3,
            Error::Exhausted { .. } | Error::ZeroAttraction { .. } => 4,
        }
    }
}
