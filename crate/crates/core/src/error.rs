use alloc::string::String;

/// Errors raised by the numerical laboratory.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Two objects that must share a dimension do not.
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch {
        /// Dimension required by the receiver.
        expected: usize,
        /// Dimension that was supplied.
        found: usize,
    },
    /// A coefficient is NaN or infinite.
    #[error("non-finite entry at index {index}")]
    NonFinite {
        /// Zero-based position of the offending entry.
        index: usize,
    },
    /// A constructor or operation parameter is out of its domain.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter {
        /// Parameter name.
        name: &'static str,
        /// Human-readable constraint that failed.
        reason: String,
    },
    /// The requested norm kind does not support this operation.
    #[error("unsupported norm kind for {operation}: {kind}")]
    UnsupportedNorm {
        /// Operation that was attempted.
        operation: &'static str,
        /// Norm kind label.
        kind: &'static str,
    },
    /// Even at the smallest admissible radius the restricted map exceeds `eps`:
    /// the operator is not continuous at the origin for this pair of norms.
    #[error("no modulus for eps = {eps}: g({delta_floor}) = {value} exceeds eps")]
    NoModulus {
        /// Target accuracy.
        eps: f64,
        /// Smallest radius that was probed.
        delta_floor: f64,
        /// Estimated value of the restricted supremum at that radius.
        value: f64,
    },
    /// The operator is (numerically) not injective on the truncation.
    #[error("operator is not injective: smallest singular value {smallest_singular_value:e}")]
    NotInjective {
        /// Smallest singular value found.
        smallest_singular_value: f64,
    },
    /// The pairing matrix has full column rank, so no nonzero element is
    /// annihilated by the functionals.
    #[error("orthogonal complement is empty (rank {rank} in dimension {dim}); use a larger dimension schedule")]
    EmptyComplement {
        /// Numerical rank of the pairing matrix.
        rank: usize,
        /// Ambient dimension that was tried.
        dim: usize,
    },
    /// Sequence index outside `1..=horizon`.
    #[error("index {index} outside 1..={horizon}")]
    OutOfRange {
        /// Requested index.
        index: usize,
        /// Largest admissible index.
        horizon: usize,
    },
}

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
