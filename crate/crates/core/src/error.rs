use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("non-finite sample at index {0}")]
    NonFinite(usize),
    #[error("quadrature did not converge: {what} (relative change {change:.3e})")]
    NoConvergence { what: String, change: f64 },
    #[error("estimate violated: {0}")]
    EstimateViolation(String),
    #[error("cross-check failed: {what} (max error {err:.3e} > {tol:.1e})")]
    CrossCheck { what: String, err: f64, tol: f64 },
    #[error("point x = {x} too close to the grid boundary")]
    Boundary { x: f64 },
    #[error("kernel rejected: {0}")]
    KernelRejected(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("parse: {0}")]
    Parse(String),
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name, reason: reason.into() }
}
