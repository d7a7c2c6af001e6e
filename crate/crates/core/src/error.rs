use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed input at row {row}, column `{column}`: {message}")]
    MalformedInput {
        row: usize,
        column: String,
        message: String,
    },

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("stratification impossible: class {label} has {count} members, need at least {folds}")]
    StratificationImpossible { label: u8, count: usize, folds: usize },

    #[error("subsampling is a no-op: target ratio {target} is not below current ratio {current}")]
    NoOpSubsample { target: f64, current: f64 },

    #[error("infeasible nesting: need {needed} minority rows but the enclosing selection has {available}")]
    InfeasibleNesting { needed: usize, available: usize },

    #[error("too few samples: need at least {needed}, found {found}")]
    TooSmall { needed: usize, found: usize },

    #[error("invalid neighbour count K={k}: must be in [1, {max}]")]
    InvalidK { k: usize, max: usize },

    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: String, found: String },

    #[error("cannot interpolate with fewer than 2 minority samples (found {0})")]
    CannotInterpolate(usize),

    #[error("infeasible request: {0}")]
    Infeasible(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("density is singular at z == x_c")]
    Singularity,

    #[error("metric undefined: {0}")]
    UndefinedMetric(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("every cross-validation fold was skipped")]
    AllFoldsSkipped,

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
