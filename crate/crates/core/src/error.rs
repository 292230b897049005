use thiserror::Error;

pub type Result<T> = std::result::Result<T, AldarError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AldarError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("fourth-moment violation: degrees of freedom {df} must exceed 4")]
    FourthMomentViolation { df: f64 },

    #[error("internal integration error: {0}")]
    Integration(String),

    #[error("explosive path: |y| = {value:e} at step {step}")]
    ExplosivePath { step: usize, value: f64 },

    #[error("series too short: need at least {needed} observations, got {got}")]
    SeriesTooShort { needed: usize, got: usize },

    #[error("series contains a non-finite value at index {0}")]
    NonFinite(usize),

    #[error("singular information matrix ({what}): reciprocal condition {rcond:e}")]
    SingularInformation { what: &'static str, rcond: f64 },

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(&'static str),

    #[error("optimizer failed to converge from any start: {0}")]
    NonConvergence(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("restricted log-likelihood exceeds unrestricted by {excess:e}")]
    OptimizerInconsistency { excess: f64 },

    #[error("parameter vector outside bounds: {0}")]
    OutOfBounds(String),

    #[error("all candidate orders failed to fit")]
    SelectionFailed,
}
