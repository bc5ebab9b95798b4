use std::path::PathBuf;

use frontier_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("missing {path}; run `frontier {prerequisite}` first")]
    MissingArtifact { path: PathBuf, prerequisite: &'static str },
    #[error("configuration: {0}")]
    Config(String),
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("internal: {0}")]
    Internal(String),
}

impl CliError {
    /// 1 for problems with the input, configuration or call order; 2 when the
    /// estimation itself breaks down.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(
                CoreError::NonFinite(_)
                | CoreError::EmptyGrid
                | CoreError::InfeasibleShape
                | CoreError::InfeasibleHeight(_)
                | CoreError::NoFeasibleQuartic,
            )
            | CliError::Internal(_) => 2,
            _ => 1,
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Core(CoreError::Csv(e))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Core(CoreError::Json(e))
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
