use thiserror::Error;

/// Errors raised by models, flows, kernels, filters and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(&'static str),
    #[error("particle flow is degenerate at lambda = {lambda}")]
    FlowDegenerate { lambda: f64 },
    #[error("particle flow diverged at lambda = {lambda}")]
    FlowDiverged { lambda: f64 },
    #[error("degenerate ensemble: all weights are zero")]
    DegenerateEnsemble,
    #[error("filter diverged at t = {t}: {reason}")]
    Diverged { t: usize, reason: String },
    #[error("config error at `{key}`: {msg}")]
    Config { key: String, msg: String },
    #[error("report error: {0}")]
    Report(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(key: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            msg: msg.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
