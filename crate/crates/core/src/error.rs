use std::path::PathBuf;

/// Errors raised across the estimation pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("missing required column `{0}`")]
    MissingColumn(String),
    #[error("{rejected} of {total} rows rejected, above the {threshold:.2}% threshold")]
    RejectThreshold {
        rejected: usize,
        total: usize,
        threshold: f64,
    },
    #[error("date {date} outside index coverage of `{index}`")]
    IndexCoverage { index: String, date: String },
    #[error("invalid price index `{index}`: {reason}")]
    InvalidIndex { index: String, reason: String },
    #[error("rank deficient design; unidentified effects: {}", .0.join(", "))]
    RankDeficient(Vec<String>),
    #[error("premium m(f, h) not positive at cells {0:?}")]
    NonPositivePremium(Vec<(u32, u32)>),
    #[error("quantity q(h) not increasing at heights {0:?}")]
    NonMonotoneQuantity(Vec<u32>),
    #[error("cell (floor {floor}, height {height}) outside fitted range")]
    CellOutOfRange { floor: u32, height: u32 },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("target variance must be positive, got {0}")]
    NonPositiveVariance(f64),
    #[error("non-finite log likelihood in bloc `{0}`")]
    NonFinite(String),
    #[error("empty grid")]
    EmptyGrid,
    #[error("every grid value infeasible at height {0}")]
    InfeasibleHeight(u32),
    #[error("no frontier path on the grids falls to a minimum and rises after it")]
    InfeasibleShape,
    #[error("no feasible quartic cost curve found")]
    NoFeasibleQuartic,
    #[error("{0} is unidentified")]
    Unidentified(String),
    #[error("inverse demand is not decreasing")]
    NonMonotoneDemand,
    #[error("height {0} outside frontier range")]
    HeightOutOfRange(u32),
    #[error("missing parameter: {0}")]
    MissingParameter(String),
    #[error("marginal cost slope is zero at q = {0}")]
    FlatMarginalCost(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
