//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A delay-measure atom failed validation; the index identifies it.
    #[error("delay measure atom {index}: {reason}")]
    InvalidDelayMeasure { index: usize, reason: String },

    #[error("invalid generator: {0}")]
    InvalidGenerator(String),

    #[error("invalid obstacle: {0}")]
    InvalidObstacle(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("regression needs at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("non-finite {what} at backward step {step}")]
    NonFinite { step: usize, what: &'static str },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("index out of bounds: {0}")]
    IndexOutOfBounds(String),

    #[error(
        "picard iteration diverged at iteration {iteration}: \
         distance grew from {previous:.6e} to {current:.6e}"
    )]
    Diverged {
        iteration: usize,
        previous: f64,
        current: f64,
    },

    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
