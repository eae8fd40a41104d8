use alloc::string::String;

pub type Result<T> = core::result::Result<T, KpmError>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum KpmError {
    #[error("argument {value} lies outside [-1, 1]")]
    Domain { value: f64 },
    #[error("invalid interval [{a}, {b}]: need -1 <= a < b <= 1")]
    Interval { a: f64, b: f64 },
    #[error("degree {0} is not a positive multiple of 4")]
    Degree(usize),
    #[error("degree mismatch: {left} vs {right}")]
    DegreeMismatch { left: usize, right: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("invalid graph: {0}")]
    Graph(String),
    #[error("matrix dimension {n} exceeds the dense eigensolver limit {limit}")]
    TooLarge { n: usize, limit: usize },
    #[error("{0} did not converge")]
    NoConvergence(String),
}
