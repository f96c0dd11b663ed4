use std::path::PathBuf;

use thiserror::Error;

use crate::series::MonthStamp;

pub type Result<T> = std::result::Result<T, Error>;

/// Broad failure classes, used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    Numeric,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error at {month}: {message}")]
    Domain { month: MonthStamp, message: String },

    #[error("domain error: {0}")]
    DomainValue(String),

    #[error("insufficient data: need at least {needed} observations, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("numeric gradient is not finite in component {component}")]
    Gradient { component: usize },

    #[error("fit error: {0}")]
    Fit(String),

    #[error("order selection failed: every candidate fit failed")]
    Selection,

    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: u64, message: String },

    #[error("duplicate month {month} in {path}")]
    DuplicateMonth { path: String, month: MonthStamp },

    #[error("{path} has gaps; missing months: {missing}")]
    Gaps { path: String, missing: String },

    #[error("{path} contains no data rows")]
    Empty { path: String },

    #[error("no record covers {month} in {path}")]
    Coverage { path: String, month: MonthStamp },

    #[error("calendar alignment failed: {0}")]
    Alignment(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("stage `{stage}` needs upstream artifact {} produced by stage `{producer}`", path.display())]
    MissingUpstream {
        stage: String,
        producer: String,
        path: PathBuf,
    },

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

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

    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Config(_) => ErrorKind::Config,
            Error::Numeric(_) | Error::Gradient { .. } | Error::Fit(_) | Error::Selection => ErrorKind::Numeric,
            Error::Stage { source, .. } => source.kind(),
            _ => ErrorKind::Data,
        }
    }
}
