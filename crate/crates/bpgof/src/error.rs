//! Error type shared across the crate.

/// Errors surfaced by the model, estimators, statistics and bootstrap engine.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    /// Parameter vector outside the admissible region Θ.
    #[error("parameter outside the admissible region: {0}")]
    InvalidTheta(String),

    /// Sample violates a precondition (empty, zero marginal mean, ...).
    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    /// A statistic's denominator or normalizer left its admissible range.
    #[error("unstable statistic {name}: {detail}")]
    UnstableStatistic { name: &'static str, detail: String },

    /// Dimension mismatch between a sample and the requested operation.
    #[error("unsupported dimension: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    /// Invalid configuration of an operation.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A numerical routine produced a non-finite value or failed to converge.
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
