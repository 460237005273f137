//! Error type shared across the crate.

/// Errors produced by state construction, protocol runs and heralding.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// The caller handed us something malformed (zero-norm input, bad
    /// truncation bound, loss probability out of range, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// An operation precondition was violated (readout-length mismatch,
    /// herald index out of range, V photon where none is allowed, ...).
    #[error("contract violation: {0}")]
    ContractViolation(String),

    /// A configured size or budget limit was exceeded.
    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    /// A heralded fidelity was requested but the herald never fires.
    #[error("fidelity undefined: total herald probability is zero")]
    UndefinedFidelity,
}

pub type Result<T> = std::result::Result<T, Error>;
