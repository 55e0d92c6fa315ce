use thiserror::Error;

use crate::historic::HistoricViolation;

#[derive(Debug, Error)]
pub enum Error {
    #[error("order parameter m must be at least 1")]
    ZeroOrder,

    #[error("leaf index {index} out of range: tree has {leaves} leaves")]
    LeafIndexOutOfRange { index: usize, leaves: usize },

    #[error("key {0} is already present in the tree")]
    DuplicateKey(usize),

    #[error("not a permutation of 1..={0}")]
    NotAPermutation(usize),

    #[error("cannot trim a tree of height 0")]
    TrimLeafRoot,

    #[error("invalid history at step {step}: {reason}")]
    InvalidHistory { step: usize, reason: String },

    #[error("invalid B-tree: {0}")]
    InvalidTree(String),

    #[error("not a historic tree: {0}")]
    NotHistoric(HistoricViolation),

    #[error("tree has {got} vertices, at least {needed} required")]
    TooFewVertices { needed: usize, got: usize },

    #[error("inconsistent inputs: {0}")]
    Inconsistent(String),

    #[error("dependency graph contains a cycle")]
    Cycle,

    #[error("{got} coefficients are not enough, this method needs at least {needed}")]
    InsufficientTerms { needed: usize, got: usize },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
