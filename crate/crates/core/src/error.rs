use thiserror::Error;

/// Errors surfaced by the construction and certification layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("enumeration budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("empty support")]
    EmptySupport,
    #[error("conditioning on a zero-probability event")]
    ZeroProbabilityEvent,
    #[error("search budget exhausted: {0}")]
    SearchExhausted(String),
    #[error("infeasible parameters: {0}")]
    Infeasible(String),
    #[error("certification failed: {0}")]
    CertificationFailed(String),
    #[error("stage {stage}: {message}")]
    Stage {
        stage: &'static str,
        message: String,
    },
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
