//! Crate-wide error type.

use alloc::string::String;

/// Everything that can go wrong across energy models, samplers, and the exact
/// analysis toolkit.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A vector or matrix had the wrong length for the object it was paired
    /// with (state vs. model, distribution vs. state space, ...).
    #[error("dimension mismatch: {context} (expected {expected}, got {got})")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    /// A constructor argument violated its documented range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// An embedding table failed a structural requirement (fewer than two
    /// tokens, mixed dimensions, duplicate vectors).
    #[error("invalid embedding table: {0}")]
    InvalidEmbeddingTable(String),

    /// A token index fell outside the embedding table.
    #[error("token index {index} out of range for table of {table_size} tokens")]
    TokenOutOfRange { index: usize, table_size: usize },

    /// A single-position proposal had no token to move to.
    #[error("no legal move: single-position proposal requires at least two tokens")]
    NoLegalMove,

    /// Full enumeration would exceed the configured state cap.
    #[error("state space of {required} sequences exceeds enumeration cap {cap}")]
    EnumerationCapExceeded { required: u128, cap: u128 },

    /// The requested kernel has no closed-form transition probabilities.
    #[error("no closed-form transition matrix for kernel: {0}")]
    UnsupportedKernel(&'static str),

    /// The projection-step transition probability is only a closed-form
    /// product of normal CDFs for two scalar embeddings per position.
    #[error(
        "projection transition probabilities require exactly 2 tokens with \
         1-dimensional embeddings (got {tokens} tokens of dimension {dim}); \
         the crossing integral has no closed form otherwise"
    )]
    InfeasibleIntegral { tokens: usize, dim: usize },

    /// The chain is reducible or periodic, so no unique stationary
    /// distribution exists.
    #[error("no unique stationary distribution: chain is not irreducible and aperiodic")]
    NoUniqueStationary,

    /// A kernel claimed to be reversible was not, within tolerance.
    #[error(
        "kernel is not reversible: detailed-balance residual {residual:.3e} \
         at state pair ({i}, {j}) exceeds {tol:.1e}"
    )]
    NotReversible {
        i: usize,
        j: usize,
        residual: f64,
        tol: f64,
    },

    /// An analysis requiring an exact constant Hessian was given a model
    /// without one.
    #[error("analysis requires a model with a constant Hessian: {0}")]
    UnsupportedModel(&'static str),

    /// A numeric routine produced an unusable result (singular solve,
    /// residual above tolerance, non-finite value).
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
}
