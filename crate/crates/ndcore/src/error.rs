use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NdError {
    #[error("shape mismatch in {op}: {left:?} vs {right:?}")]
    ShapeMismatch {
        op: &'static str,
        left: [usize; 2],
        right: [usize; 2],
    },
    #[error("backward requires a scalar loss, got shape {0:?}")]
    NotScalar([usize; 2]),
    #[error("invalid rate: {0}")]
    InvalidRate(String),
}

pub type Result<T> = std::result::Result<T, NdError>;
