use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("size error: {what} = {size} exceeds cap {cap}")]
    Size {
        what: &'static str,
        size: usize,
        cap: usize,
    },
    #[error("validation error: {0}")]
    Validation(String),
    #[error("integration quality: gram drift {drift:.3e} at t = {t:.4} exceeds {limit:.1e}; reduce dt")]
    Integration { drift: f64, t: f64, limit: f64 },
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}
