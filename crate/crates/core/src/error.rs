use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("point {point:?} lies outside the smoothness domain of `{field}`")]
    Domain { field: String, point: Vec<f64> },
    #[error("derivative order {0} requested, at most 2 is supported")]
    OrderTooHigh(usize),
    #[error("index {index} out of range 1..={max}")]
    IndexOutOfRange { index: usize, max: usize },
    #[error("rank mismatch: expected {expected}, got {got}")]
    RankMismatch { expected: usize, got: usize },
    #[error("degree mismatch: form degree {degree} but {args} arguments")]
    DegreeMismatch { degree: usize, args: usize },
    #[error("frame matrix ill-conditioned (condition number {cond:.3e})")]
    IllConditioned { cond: f64 },
    #[error("non-positive value {value} of `{what}`")]
    NonPositive { what: String, value: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("quadrature failure: {0}")]
    Quadrature(String),
    #[error("empty input: {0}")]
    Empty(String),
}

pub type Result<T> = std::result::Result<T, Error>;
