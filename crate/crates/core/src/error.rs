use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid material: {0}")]
    InvalidMaterial(String),

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("assembly failed in element {element}: {message}")]
    Assembly { element: usize, message: String },

    #[error("mass matrix is not symmetric positive definite")]
    MassNotPositiveDefinite,

    #[error("eigensolver failed at k = {k}: {message}")]
    Solver { k: f64, message: String },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("mode {index} is degenerate; the derivative expansion does not apply")]
    DegenerateMode { index: usize },

    #[error("structural mismatch: {0}")]
    Structural(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
