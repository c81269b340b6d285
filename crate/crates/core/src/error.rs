use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("value {value} is outside the domain of {op}")]
    Domain { op: &'static str, value: f64 },

    #[error("invalid count arguments: k = {k}, n = {n}")]
    InvalidCounts { k: u64, n: u64 },

    #[error("input has dimension {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid probability vector: {0}")]
    InvalidProbabilities(String),
}
