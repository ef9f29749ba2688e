use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual} ({context})")]
    Dimension {
        expected: usize,
        actual: usize,
        context: &'static str,
    },
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("filter infeasible at state {state:?}")]
    Infeasible { state: Vec<f64> },
    #[error("relaxed compatibility violated at boundary state {state:?}: Lfb + Lgb u = {value:e} < 0")]
    CompatibilityViolation { state: Vec<f64>, value: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("malformed file: {0}")]
    Format(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_dim(expected: usize, actual: usize, context: &'static str) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::Dimension {
            expected,
            actual,
            context,
        })
    }
}
