//! Error types shared across the crate.

use thiserror::Error;

/// Everything that can go wrong while building problems, sampling indices,
/// running optimizers, or evaluating checks.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied argument violates a precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A component gradient or value came back non-finite.
    #[error("numerical fault in component {index}: {detail}")]
    NumericalFault { index: usize, detail: String },

    /// A transition matrix is not a valid ergodic chain.
    #[error("invalid markov chain: {0}")]
    InvalidChain(String),

    /// Mixing-time search exhausted its horizon.
    #[error("mixing time not reached within k_max = {k_max}")]
    HorizonExceeded { k_max: usize },

    /// A deterministic pattern never samples some component.
    #[error("uncoverable pattern: component {index} is never sampled")]
    UncoverablePattern { index: usize },

    /// An iterate left the trust region or went non-finite.
    #[error("divergence at iteration {iteration}: {detail}")]
    Divergence { iteration: usize, detail: String },

    /// A trace is too short for the requested check.
    #[error("insufficient trace: need {needed} recorded iterations, have {actual}")]
    InsufficientTrace { needed: usize, actual: usize },

    /// A windowed check was asked about an iteration before the window fills.
    #[error("out of window: k = {k} is before tau = {tau}")]
    OutOfWindow { k: usize, tau: usize },

    /// An envelope/theorem was requested for a problem that does not satisfy
    /// its hypotheses (e.g. the strongly convex envelope with mu = 0).
    #[error("invalid combination: {0}")]
    InvalidCombination(String),

    /// Configuration file is syntactically or semantically invalid.
    #[error("config error: {0}")]
    Config(String),

    /// Filesystem trouble while writing traces or reports.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
