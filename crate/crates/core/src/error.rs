use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// A dimension parameter was zero or otherwise unusable.
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    /// Two objects that must share a dimension do not.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A requested size exceeds a configured cap.
    #[error("size cap exceeded: {0}")]
    SizeCap(String),

    /// An argument failed a precondition that is not a dimension issue.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The Gram matrix for the requested (k, N) is singular or too
    /// ill-conditioned to invert reliably.
    #[error("weingarten: Gram matrix not invertible for k={k}, n={n} (need n >= k)")]
    SingularGram { k: usize, n: usize },

    /// A computed quantity violated an internal consistency bound,
    /// signalling a formula or implementation bug rather than bad input.
    #[error("internal consistency violation: {0}")]
    Inconsistent(String),
}

pub type Result<T> = std::result::Result<T, Error>;
