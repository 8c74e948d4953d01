use thiserror::Error;

use crate::grid::ScalarField;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("shape does not fit strictly inside the box [-{half_width}, {half_width}]^2")]
    ShapeOutsideBox { half_width: f64 },

    #[error("degenerate shape: {0}")]
    DegenerateShape(String),

    #[error("empty region")]
    EmptyRegion,

    #[error("regions live on different grids")]
    GridMismatch,

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid argument `{key}`: {reason}")]
    InvalidArgument { key: String, reason: String },

    #[error("parse error: {0}")]
    Parse(String),

    /// The nonlinear solver hit its iteration cap. Carries the last iterate.
    #[error("solver did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    NotConverged {
        iterations: usize,
        residual: f64,
        last: Box<ScalarField>,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }

    pub(crate) fn invalid(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidArgument {
            key: key.into(),
            reason: reason.into(),
        }
    }
}
