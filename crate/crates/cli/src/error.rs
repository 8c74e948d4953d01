use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] fbconvex::Error),

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("{0}")]
    NotConverged(String),

    #[error("failed checks: {0}")]
    ChecksFailed(String),
}

impl CliError {
    /// 1 for usage and config errors, 2 when a computation ran but did not
    /// converge or a check failed.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::NotConverged(_) | CliError::ChecksFailed(_) => 2,
            CliError::Core(fbconvex::Error::NotConverged { .. }) => 2,
            _ => 1,
        }
    }
}
