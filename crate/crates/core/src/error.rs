use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("vertex id {id} out of range for graph with {n} vertices")]
    VertexOutOfRange { id: usize, n: usize },

    #[error("negative edge weight {weight} on ({u}, {v})")]
    NegativeWeight { u: usize, v: usize, weight: f64 },

    #[error("invalid threshold {0}: must be a non-negative number")]
    InvalidThreshold(f64),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("not a permutation: {0}")]
    NotPermutation(String),

    #[error("vertex set must be strictly increasing (problem at position {0})")]
    UnsortedVertexSet(usize),

    #[error("graph has no vertices")]
    EmptyGraph,

    #[error("eigensolver did not converge: {converged} of {wanted} pairs after {iterations} iterations")]
    NoConvergence {
        converged: usize,
        wanted: usize,
        iterations: usize,
    },

    #[error("results disagree: {0}")]
    Mismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("size guard exceeded: n = {n}, limit {limit}")]
    SizeGuard { n: usize, limit: usize },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Coarse classification used for process exit codes and HTTP statuses.
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::NoConvergence { .. } | Error::Mismatch(_) => ErrorClass::Numeric,
            Error::Io(_) => ErrorClass::Io,
            _ => ErrorClass::Input,
        }
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Input,
    Numeric,
    Io,
}
