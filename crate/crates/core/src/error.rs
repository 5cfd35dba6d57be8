use thiserror::Error;

/// Errors raised by the numerical operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{what} = {value} lies outside {domain}")]
    Domain {
        what: &'static str,
        value: f64,
        domain: String,
    },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("empty window: {0}")]
    EmptyWindow(String),
    #[error("degenerate grid: {0}")]
    DegenerateGrid(String),
    #[error("could not bracket a root: {0}")]
    Bracket(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("insufficient resolution: {0}")]
    Resolution(String),
    #[error("datum does not vanish on the boundary (largest boundary value {0:e})")]
    BoundaryNonzero(f64),
    #[error("final time {t} reaches the blow-up guard {guard}")]
    BlowUpGuard { t: f64, guard: f64 },
    #[error("instability at t = {t}: {detail}")]
    Instability { t: f64, detail: String },
    #[error("no log-concavity violation found in the search window")]
    NoViolation,
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidParameter(msg.into()))
}
