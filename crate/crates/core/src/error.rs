//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HdxError {
    #[error("field error: {0}")]
    Field(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("size cap exceeded: {0}")]
    Size(String),

    #[error("no unique maximal common dominated element: {0}")]
    Ambiguous(String),

    #[error("not a face: {0}")]
    Membership(String),

    #[error("invalid complex: {0}")]
    Complex(String),

    #[error("eigensolver did not converge: {0}")]
    NonConvergence(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}
