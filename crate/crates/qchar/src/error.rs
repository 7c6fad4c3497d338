use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum QError {
    #[error("non-invertible series: {0}")]
    NonInvertible(String),
    #[error("non-terminating infinite product: {0}")]
    NonTerminating(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("divergent theta: {0}")]
    DivergentTheta(String),
    #[error("not in root-lattice coset: {0}")]
    NotInCoset(String),
    #[error("non-dominant weight: {0}")]
    NonDominant(String),
    #[error("rank mismatch: {0} vs {1}")]
    RankMismatch(usize, usize),
    #[error("insufficient precision: {0}")]
    Precision(String),
    #[error("increase T: {0}")]
    IncreaseT(String),
    #[error("resource cap exceeded: {0}")]
    Cap(String),
    #[error("no convergence: {0}")]
    NoConvergence(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("arithmetic overflow in {0}")]
    Overflow(&'static str),
}

pub type QResult<T> = Result<T, QError>;
