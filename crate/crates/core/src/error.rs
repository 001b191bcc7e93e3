use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A truncated quasi-greedy expansion is too short to decide admissibility.
    #[error("admissibility undecided: need {needed} digits of d_-(1, beta), have {available}")]
    Indeterminate { needed: usize, available: usize },

    #[error("no root of phi_beta(word) = 1 in (1, {upper}]")]
    NoRoot { upper: f64 },

    /// The word is not the greedy expansion of 1 for the root that was found.
    #[error("word is not a greedy expansion of 1: first mismatch at digit {index} (expected {expected}, found {found})")]
    Inconsistent {
        index: usize,
        expected: u32,
        found: u32,
    },

    #[error("word is not allowable: {0}")]
    NotAllowable(crate::derived::Disallowed),

    /// The truncation depth leaves a tail band that can never be discharged.
    #[error("truncation depth {depth} too shallow: tail band {tail_band:e} at x = {x} is not below 2*delta = {}", 2.0 * delta)]
    TruncationTooShallow {
        depth: usize,
        x: f64,
        tail_band: f64,
        delta: f64,
    },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("point cloud too small: {size} points, need at least {required}")]
    UndersizedCloud { size: usize, required: usize },

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
