use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters for {family}: {message}")]
    ParameterDomain { family: String, message: String },

    #[error("non-finite {quantity} at (u, v) = ({u}, {v})")]
    Evaluation { quantity: &'static str, u: f64, v: f64 },

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("sampling from {family} failed at conditioning value u = {conditioning}")]
    Sampling { family: String, conditioning: f64 },

    #[error("rejection sampler produced {achieved} of {target} requested draws")]
    SamplingShortfall { achieved: usize, target: usize },

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("dependence measure undefined at r = {r}: {reason}")]
    UndefinedMeasure { r: f64, reason: String },

    #[error("conditioning event has probability {probability:e}, too small to condition on")]
    ConditioningDegenerate { probability: f64 },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn params(family: impl Into<String>, message: impl Into<String>) -> Self {
        Error::ParameterDomain { family: family.into(), message: message.into() }
    }

    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Evaluation { .. }
                | Error::Sampling { .. }
                | Error::SamplingShortfall { .. }
                | Error::Fit(_)
                | Error::UndefinedMeasure { .. }
                | Error::ConditioningDegenerate { .. }
        )
    }
}
