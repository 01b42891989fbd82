use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("point {x} lies outside the open interval ({a}, {b})")]
    Domain { x: f64, a: f64, b: f64 },

    #[error("grid of {points} points cannot resolve {modes} modes (need at least {required})")]
    Resolution {
        points: usize,
        modes: usize,
        required: usize,
    },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("autocorrelation eigenvalue {lam} is too close to 1 in magnitude")]
    NearSingular { lam: f64 },

    #[error("design is singular at frequency {frequency}")]
    SingularDesign { frequency: usize },

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("truncation {k_n} too large: empirical eigenvalue {index} is {value:e}, below the floor {floor:e}")]
    TruncationTooLarge {
        k_n: usize,
        index: usize,
        value: f64,
        floor: f64,
    },

    #[error("no residual available at time {time}")]
    MissingResidual { time: usize },

    #[error("config key `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

impl Error {
    pub(crate) fn dims(msg: impl Into<String>) -> Self {
        Error::DimensionMismatch(msg.into())
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// True for failures of the numerical pipeline, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NearSingular { .. }
                | Error::SingularDesign { .. }
                | Error::NotPositiveDefinite(_)
                | Error::TruncationTooLarge { .. }
        )
    }
}
