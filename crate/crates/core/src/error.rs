use thiserror::Error;

/// Error type shared by every module of the crate.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Shapes or lengths of the inputs do not match.
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },

    /// An input violates a precondition (empty, out of range, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A non-finite value (NaN or ±∞) was found where finite data is required.
    #[error("non-finite value: {0}")]
    NonFinite(String),

    /// The requested operation is not defined for these spaces or norms.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// The operation would exceed an enumeration or search budget.
    #[error("budget exceeded: {0}")]
    Budget(String),

    /// The search objective returned a non-finite value at `point`.
    #[error("search failed: objective non-finite at {point:?}")]
    SearchFailure { point: Vec<f64> },

    /// A certificate could not be issued (failed precondition or missing route).
    #[error("certificate refused: {0}")]
    Refused(String),

    /// Two certified quantities contradict each other; signals a bug upstream.
    #[error("internal inconsistency: {0}")]
    Inconsistency(String),
}

pub type Result<T> = std::result::Result<T, Error>;
