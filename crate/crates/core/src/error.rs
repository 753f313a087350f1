//! Error type shared across the library, with process exit-code mapping.

use thiserror::Error;

/// Errors surfaced by field construction, descent, jacobian arithmetic,
/// pairings, the protocol, and the attack toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied parameter violates a documented precondition.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Characteristic is not prime.
    #[error("{0} is not prime")]
    NotPrime(u64),

    /// A randomized search ran out of attempts.
    #[error("search exhausted after {attempts} attempts: {what}")]
    SearchExhausted { what: String, attempts: usize },

    /// Function evaluation hit a zero or pole on the divisor's support.
    #[error("degenerate support: {0}")]
    DegenerateSupport(String),

    /// A divisor expected to be ell-torsion is not.
    #[error("point is not {ell}-torsion")]
    NonTorsion { ell: u64 },

    /// A descent tuple fed to the recovery toolkit is not vital.
    #[error("term is not vital: {0}")]
    NotVital(String),

    /// Basis recovery produced an element generating a proper subfield.
    #[error("recovered element generates a proper subfield (degree {degree} < {d})")]
    NonGenerating { degree: usize, d: usize },

    /// Masking could not find a suitable ideal multiple for a leaking block.
    #[error("masking failed: {0}")]
    MaskingFailed(String),

    /// Serialized artifact failed schema validation.
    #[error("schema error: {0}")]
    Schema(String),

    /// An internal invariant was breached; indicates a bug, not bad input.
    #[error("internal invariant breached: {0}")]
    Internal(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code for the CLI: 2 precondition, 3 schema, 4 internal.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Schema(_) | Error::Json(_) => 3,
            Error::Internal(_) => 4,
            _ => 2,
        }
    }

    pub(crate) fn pre(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }

    pub(crate) fn internal(msg: impl Into<String>) -> Self {
        Error::Internal(msg.into())
    }
}
