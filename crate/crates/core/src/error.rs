use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error(
        "quadrature did not converge after {refinements} refinements \
         (estimate {estimate:e}, error estimate {error_estimate:e})"
    )]
    QuadratureNonConvergence {
        estimate: f64,
        error_estimate: f64,
        refinements: usize,
    },

    #[error("the UV-limit covariance diverges at x = 0 for d >= 2")]
    DivergentCovariance,

    #[error("unknown interaction `{name}`; available: {available}")]
    UnknownInteraction { name: String, available: String },

    #[error("interaction `{interaction}` does not satisfy assumption {assumption}: {detail}")]
    MissingAssumption {
        interaction: String,
        assumption: &'static str,
        detail: &'static str,
    },

    #[error("lattice mismatch: {0}")]
    LatticeMismatch(String),

    #[error(
        "cutoff {cutoff} is not resolved by lattice spacing {spacing}: \
         need cutoff <= pi/(2a) = {max_cutoff}"
    )]
    UnresolvedCutoff {
        cutoff: f64,
        spacing: f64,
        max_cutoff: f64,
    },

    #[error("overlap matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("source must be band-limited (compact Fourier support) for the eta > 1 regime")]
    SourceNotBandLimited,

    #[error(
        "the connected two-point function is not determined by the limiting generating \
         functional; it is finite only for eta <= 0 (see two_point_classify)"
    )]
    TwoPointUndefined,

    #[error("malformed field file: {0}")]
    Format(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("internal fault: {0}")]
    Internal(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
