use alloc::string::String;

/// Errors raised by the design and evaluation routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: {detail}")]
    Dimension {
        context: &'static str,
        detail: String,
    },
    #[error("invalid unfolding mode {0} (expected 1, 2 or 3)")]
    InvalidMode(usize),
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("degenerate input: {0}")]
    Degenerate(&'static str),
    #[error("matrix is not Hermitian (asymmetry {asymmetry:e})")]
    NotHermitian { asymmetry: f64 },
    #[error("matrix is not positive definite (eigenvalue {eigenvalue:e}, largest {largest:e})")]
    NotPositiveDefinite { eigenvalue: f64, largest: f64 },
    #[error("relay transmit power is zero, cannot normalize")]
    ZeroPower,
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn dim_err(context: &'static str, detail: String) -> Error {
    Error::Dimension { context, detail }
}
