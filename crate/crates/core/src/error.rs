use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid lifespan distribution: {0}")]
    InvalidDistribution(String),

    #[error("malformed lifespan spec `{spec}`: {reason}")]
    MalformedSpec { spec: String, reason: String },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// `b * E[V] <= 1`: the exponent has no positive root.
    #[error("subcritical model: b * E[V] = {mean_offspring} <= 1")]
    SubcriticalModel { mean_offspring: f64 },

    #[error("grid too fine: {points} points exceeds the limit of {limit}")]
    GridTooFine { points: usize, limit: usize },

    #[error("renewal problem is inconsistent: {0}")]
    InconsistentGrid(String),

    #[error("lifespan law `{0}` is not supported by this operation")]
    UnsupportedLifespan(String),

    #[error("too few samples: got {got}, need at least {need}")]
    TooFewSamples { got: usize, need: usize },

    #[error("{dropped} of {total} replicates exceeded the individual cap")]
    TooManyTruncated { dropped: usize, total: usize },
}
