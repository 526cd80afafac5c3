//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by unit construction, training and closed-loop simulation.
#[derive(Debug, Clone, Error)]
pub enum HonuError {
    /// A vector or weight dimension does not match what the operation expects.
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    /// Sample index `k` is too small for the requested lag depths. Training and
    /// evaluation must start at sample `required`.
    #[error("sample {k} has insufficient history; first usable sample is {required}")]
    InsufficientHistory { k: usize, required: usize },

    /// The series is too short to fit the requested lag structure meaningfully.
    #[error("series of {len} samples is too short; at least {required} required")]
    InsufficientData { len: usize, required: usize },

    /// A weight or error became non-finite during training. Carries the epoch
    /// and sample index at which the run was aborted, plus the finite SSE trace
    /// of the epochs completed before the abort.
    #[error("training diverged at epoch {epoch}, sample {sample}")]
    Diverged {
        epoch: usize,
        sample: usize,
        completed_sse: Vec<f64>,
    },

    /// A weight vector contains a non-finite entry.
    #[error("non-finite weight at index {index}")]
    NonFiniteWeight { index: usize },

    /// The regularized normal-equation solve failed. With finite inputs and
    /// mu > 0 the system is positive definite, so this signals NaN
    /// contamination upstream.
    #[error("linear solve failed: {context}")]
    SolveFailed { context: String },

    /// A configuration value is out of its valid range.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, HonuError>;
