use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("curvature must be finite and non-negative, got {0}")]
    InvalidCurvature(f64),

    /// Hyperbolic formulas divide by √c; c = 0 goes through the Euclidean-limit routines.
    #[error("operation needs c > 0; use the Euclidean-limit routine for c = 0")]
    ZeroCurvature,

    #[error("point outside the Poincaré ball (c·‖x‖² = {0})")]
    OutsideBall(f64),

    #[error("hyperplane normal t must be nonzero")]
    ZeroNormal,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("point set has zero diameter")]
    ZeroDiameter,

    #[error("dataset contains a single class")]
    SingleClass,

    #[error("{n} points exceed the exact-δ limit of {limit}; use sampling")]
    TooManyPoints { n: usize, limit: usize },

    #[error("line {line}: {msg}")]
    Format { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn format(line: usize, msg: impl Into<String>) -> Self {
        Error::Format { line, msg: msg.into() }
    }
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
