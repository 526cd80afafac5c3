//! Command-line error type carrying the process exit code.

use honu::HonuError;

/// Exit codes: 0 success, 1 configuration error, 2 divergence, 3 benchmark
/// budget failure.
#[derive(Debug)]
pub enum AppError {
    Config(String),
    Diverged {
        epoch: usize,
        sample: usize,
        completed_sse: Vec<f64>,
    },
    BudgetExceeded {
        mean_ms: f64,
        budget_ms: f64,
    },
    Io(String),
}

impl AppError {
    pub fn config(msg: impl Into<String>) -> Self {
        AppError::Config(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Config(_) | AppError::Io(_) => 1,
            AppError::Diverged { .. } => 2,
            AppError::BudgetExceeded { .. } => 3,
        }
    }
}

impl std::fmt::Display for AppError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AppError::Config(msg) => write!(f, "configuration error: {msg}"),
            AppError::Diverged { epoch, sample, .. } => {
                write!(f, "training diverged at epoch {epoch}, sample {sample}")
            }
            AppError::BudgetExceeded { mean_ms, budget_ms } => write!(
                f,
                "mean step cost {mean_ms:.4} ms exceeds budget {budget_ms} ms"
            ),
            AppError::Io(msg) => write!(f, "io error: {msg}"),
        }
    }
}

impl std::error::Error for AppError {}

impl From<HonuError> for AppError {
    fn from(e: HonuError) -> Self {
        match e {
            HonuError::Diverged {
                epoch,
                sample,
                completed_sse,
            } => AppError::Diverged {
                epoch,
                sample,
                completed_sse,
            },
            other => AppError::Config(other.to_string()),
        }
    }
}

impl From<std::io::Error> for AppError {
    fn from(e: std::io::Error) -> Self {
        AppError::Io(e.to_string())
    }
}
