use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid epsilon grid: {0}")]
    InvalidEpsGrid(String),
    #[error("invalid spatial grid: {0}")]
    InvalidSpatialGrid(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("need at least {need} samples, got {got}")]
    TooFewPoints { need: usize, got: usize },
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParam { name: &'static str, reason: String },
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
    #[error("mollifier unresolved at eps[{index}] = {eps:e}: width {width:e} < 4h = {limit:e}")]
    Unresolved {
        index: usize,
        eps: f64,
        width: f64,
        limit: f64,
    },
    #[error("outside the computational domain: {0}")]
    OutOfDomain(String),
    #[error("net is not strongly positive: value {value:e} at eps[{index}]")]
    NotPositive { index: usize, value: f64 },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("cone and frequency band have no grid frequency in common")]
    EmptyCone,
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("no zero crossing before t = {horizon} at eps[{index}]")]
    NoCrossing { index: usize, horizon: f64 },
    #[error("initial data not null at eps[{index}]: |q1| = {residual:e}")]
    NotNull { index: usize, residual: f64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParam {
        name,
        reason: reason.into(),
    }
}
