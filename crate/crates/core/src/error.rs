use thiserror::Error;

/// Errors raised across the crate.
///
/// Variants are grouped so that a front end can map them onto distinct
/// failure classes (configuration, I/O, protocol violation, size guard).
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid modulus {0}: need 2 <= q <= 2^31")]
    InvalidModulus(u64),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("bit block {block} encodes {value}, which is not below q = {q}")]
    BitPattern { block: usize, value: u64, q: u64 },

    #[error("{what}: size {size} exceeds the enumeration guard {limit}")]
    Guard { what: &'static str, size: f64, limit: f64 },

    #[error("trapdoor decoding failed")]
    DecodeFailure,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid device: {0}")]
    InvalidDevice(String),

    #[error("protocol violation: {0}")]
    Protocol(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn guard(what: &'static str, size: f64, limit: f64) -> Result<()> {
    if size > limit {
        Err(Error::Guard { what, size, limit })
    } else {
        Ok(())
    }
}
