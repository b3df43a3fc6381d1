use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed data: {0}")]
    MalformedData(String),

    #[error("insufficient history: {rows} rows, need at least {needed}")]
    InsufficientHistory { rows: usize, needed: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("market return series has zero variance")]
    DegenerateMarket,

    #[error("no assets survive filtering")]
    EmptyUniverse,

    #[error("covariance is not repairable: eigenvalue {eigenvalue:e} is at or below -{threshold:e}")]
    NotRepairable { eigenvalue: f64, threshold: f64 },

    #[error("portfolio is empty")]
    EmptyPortfolio,

    #[error("portfolio has zero variance")]
    DegeneratePortfolio,

    #[error("unsupported portfolio size {size} (universe of {universe})")]
    UnsupportedSize { size: usize, universe: usize },

    #[error("parameter out of range: {0}")]
    ParamOutOfRange(String),

    #[error("invalid phase order: {0}")]
    InvalidPhaseOrder(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("affine transform with a = 0 is degenerate")]
    DegenerateTransform,

    #[error("universe of {universe} assets requires a sample budget (exhaustive limit {limit})")]
    BudgetRequired { universe: usize, limit: usize },

    #[error("universe of {universe} assets exceeds the exhaustive cap of {cap}")]
    BudgetExceeded { universe: usize, cap: usize },

    #[error("result pool of {pool} is too small for k = {k}")]
    InsufficientPool { pool: usize, k: usize },

    #[error("need {needed} all-stars, report has {available}")]
    InsufficientStars { needed: usize, available: usize },

    #[error("enumeration interrupted after mask index {last_index}")]
    Interrupted { last_index: u64 },

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
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
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Stable identifier used in machine-readable error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::MalformedData(_) => "MalformedData",
            Error::InsufficientHistory { .. } => "InsufficientHistory",
            Error::Domain(_) => "DomainError",
            Error::DegenerateMarket => "DegenerateMarket",
            Error::EmptyUniverse => "EmptyUniverse",
            Error::NotRepairable { .. } => "NotRepairable",
            Error::EmptyPortfolio => "EmptyPortfolio",
            Error::DegeneratePortfolio => "DegeneratePortfolio",
            Error::UnsupportedSize { .. } => "UnsupportedSize",
            Error::ParamOutOfRange(_) => "ParamOutOfRange",
            Error::InvalidPhaseOrder(_) => "InvalidPhaseOrder",
            Error::Dimension { .. } => "DimensionError",
            Error::DegenerateTransform => "DegenerateTransform",
            Error::BudgetRequired { .. } => "BudgetRequired",
            Error::BudgetExceeded { .. } => "BudgetExceeded",
            Error::InsufficientPool { .. } => "InsufficientPool",
            Error::InsufficientStars { .. } => "InsufficientStars",
            Error::Interrupted { .. } => "Interrupted",
            Error::Config(_) => "ConfigError",
            Error::Io { .. } => "IoError",
            Error::Csv(_) => "MalformedData",
            Error::Json(_) => "IoError",
        }
    }
}
