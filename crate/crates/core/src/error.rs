use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("index {index} out of range for {what} (size {size})")]
    Index {
        what: &'static str,
        index: usize,
        size: usize,
    },

    #[error("invalid mixed profile: {0}")]
    InvalidProfile(String),

    #[error("game too large: {entries} utility entries exceed the cap of {cap}")]
    CapExceeded { entries: u128, cap: u128 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("not feasible for the continuous formulation: {constraint} violated by {violation:e}")]
    NotQFeasible { constraint: String, violation: f64 },

    #[error("not feasible for the mixed-integer formulation: {constraint} violated by {violation:e}")]
    NotPFeasible { constraint: String, violation: f64 },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
