//! Error taxonomy shared by the library modules.

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Failures surfaced by constructors, operations, and runtime checks.
///
/// `InvariantViolation` is reserved for conditions that indicate a bug in a
/// mechanism run (non-monotone prices, a non-nested active set, ...) rather
/// than bad input; callers map it to a distinct process exit code.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Input outside the documented domain (negative mean, quantile outside
    /// [0,1], probabilities that do not sum to one, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Structurally valid input that this implementation does not handle
    /// (oversized explicit family, unknown environment label, ...).
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// Instance too large for an exact method (brute-force enumeration,
    /// branch and bound).
    #[error("size limit exceeded: {0}")]
    SizeLimit(String),

    /// No feasible completion exists (padding a set stranded outside an
    /// explicit family, constraint with no feasible subset).
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// A degenerate instance for which the requested statistic is undefined
    /// (all-zero denominator in a ratio estimate, no solvable threshold).
    #[error("degenerate instance: {0}")]
    Degenerate(String),

    /// A runtime check on mechanism behavior failed; indicates a bug.
    #[error("invariant violation: {0}")]
    InvariantViolation(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn invariant(msg: impl Into<String>) -> Self {
        Error::InvariantViolation(msg.into())
    }
}
