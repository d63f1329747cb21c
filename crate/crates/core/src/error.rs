use thiserror::Error;

/// Errors raised across the estimation and certification pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid point configuration: {0}")]
    InvalidConfig(String),

    #[error("degenerate configuration: {0}")]
    Degenerate(String),

    #[error("invalid subdivision: {0}")]
    InvalidSubdivision(String),

    /// Two heights inside one simplex coincide, so the score matrix entries are
    /// undefined. Callers should switch to a reduced chart.
    #[error("coincident heights at points {0} and {1} inside one simplex")]
    CoincidentHeights(usize, usize),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("jacobian is singular or ill-conditioned: {0}")]
    SingularJacobian(String),

    #[error("term budget of {budget} exceeded while expanding equation {equation}")]
    TermBudget { budget: usize, equation: usize },

    #[error("branch {branch} of the r-Lambert function does not exist ({regime})")]
    NoBranch { branch: usize, regime: String },

    #[error("point {0} lies outside every cell of the subdivision")]
    OutsideCell(usize),

    #[error("{0}")]
    Domain(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
