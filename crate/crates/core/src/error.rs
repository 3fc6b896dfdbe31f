use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("order m must be at least 1 (got {0})")]
    InvalidOrder(u32),
    #[error("index {index} out of range {range}")]
    IndexOutOfRange { index: usize, range: String },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("cannot add pi-rationals with different powers of pi ({0} vs {1})")]
    PiPowerMismatch(i32, i32),
    #[error("division by zero")]
    DivisionByZero,
    #[error("grid must be non-empty and strictly increasing")]
    BadGrid,
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("singular linear system: {0}")]
    Singular(String),
    #[error("trajectory did not converge: {0}")]
    NotConverged(String),
    #[error("too few samples: need {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("inconsistent inputs: {0}")]
    Inconsistent(String),
}

pub type Result<T> = std::result::Result<T, Error>;
