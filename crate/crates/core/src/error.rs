use std::path::PathBuf;

use thiserror::Error;

use crate::expr::ParseError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid too small: {what} needs at least {min} nodes per axis, got {got}")]
    GridTooSmall {
        what: &'static str,
        min: usize,
        got: usize,
    },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("{op} is only defined on 1D grids")]
    NotOneDimensional { op: &'static str },

    #[error("non-finite coefficient in {0}")]
    NonFinite(&'static str),

    #[error("singular matrix: zero pivot in column {column}")]
    Singular { column: usize },

    #[error("Newton iteration did not converge in {iterations} iterations (residual history: {history:?})")]
    NewtonDiverged {
        iterations: usize,
        history: Vec<f64>,
    },

    #[error("{scheme} {phase} step failed at time level {level} (dt = {dt:e}): {source}")]
    Step {
        scheme: &'static str,
        phase: &'static str,
        level: usize,
        dt: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("expression uses variable `{0}` which is not available here")]
    MissingVariable(&'static str),

    #[error("problem too large for the dense oracle: {unknowns} unknowns (limit {limit})")]
    TooLarge { unknowns: usize, limit: usize },

    #[error("rate fit is degenerate: {0}")]
    DegenerateFit(&'static str),

    #[error("grids are not nested: {0}")]
    NotNested(String),

    #[error("config error in `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
