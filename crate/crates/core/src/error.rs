use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised by the statistical kernels, simulators and experiments.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("series needs at least {min} observations, got {got}")]
    TooShort { min: usize, got: usize },

    #[error("non-finite observation at index {index}")]
    NonFinite { index: usize },

    #[error("lag {lag} out of range for a series of length {n}")]
    LagOutOfRange { lag: usize, n: usize },

    #[error("bandwidth {q} out of range for a series of length {n}")]
    BandwidthOutOfRange { q: usize, n: usize },

    #[error("long-run variance estimate is zero; the series carries no variation")]
    ZeroVariance,

    #[error("kernel produced a negative long-run variance {value:e}")]
    NegativeVariance { value: f64 },

    #[error("segment {lo}..{hi} leaves a piece shorter than the minimum length {min}")]
    SegmentTooShort { lo: usize, hi: usize, min: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("covariance matrix of order {n} is not positive definite")]
    Factorization { n: usize },
}

impl Error {
    pub(crate) fn invalid(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.into(),
            reason: reason.into(),
        }
    }

    /// Degenerate-data errors, as opposed to invalid input or configuration.
    pub fn is_computational(&self) -> bool {
        matches!(
            self,
            Error::ZeroVariance | Error::NegativeVariance { .. } | Error::SegmentTooShort { .. }
        )
    }
}
