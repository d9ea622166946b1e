use thiserror::Error;

use crate::expr::ParseError;

/// Errors reported by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("not positive definite: pivot {pivot:e} at row {row}")]
    NotPositiveDefinite { row: usize, pivot: f64 },
    #[error("internal error: {0}")]
    Internal(String),
    #[error("parse error at {0}")]
    Parse(#[from] ParseError),
    #[error("evaluation failed: {0}")]
    Eval(String),
    #[error("g grows too slowly: no k <= {k_max} with g(k*{delta}) > {y}")]
    GrowthTooSlow { y: f64, delta: f64, k_max: u64 },
    #[error("critical point: |p'(z)| <= eta at z = {re}{im:+}i")]
    CriticalPoint { re: f64, im: f64 },
    #[error("degenerate tower data in stage `{0}`")]
    Degenerate(&'static str),
    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
