//! Finite-sum optimization with verifiable convergence bounds.
//!
//! This crate implements the classical finite-sum first-order methods GD, SGD,
//! SAG, SAGA, and IAG over pluggable index-sampling schemes (I.I.D. uniform,
//! stationary Markov chains, deterministic cyclic/custom patterns), together
//! with a verification harness that instruments the quantities appearing in
//! their convergence analyses — gradient-memory staleness, gradient-error
//! bounds, a shifted-window Lyapunov function, burn-in bounds, and final rate
//! envelopes — as runtime-checkable predicates.
//!
//! The main pieces:
//!
//! - [`problems`]: finite-sum objectives `f = (1/N) Σ f_i` with analytically
//!   known constants (smoothness `L`, strong convexity `μ`, minimizers, the
//!   radius `B`), plus finite-difference gradient validation.
//! - [`samplers`]: index streams and exact mixing-time analysis for finite
//!   Markov chains.
//! - [`optimizers`]: the five gradient estimators, the gradient-memory table
//!   with running-sum updates, and the iteration driver producing traces.
//! - [`diagnostics`]: per-iteration inequality checks (approximate descent,
//!   gradient error, one-step contraction, burn-in) and closed-form rate
//!   envelopes.
//! - [`concentration`]: staleness bound formulas, Bernstein tail expressions,
//!   and Monte Carlo validation of the bounded-staleness "good event".
//! - [`harness`]: JSON-configured experiment orchestration (run / verify /
//!   sweep) with CSV traces and JSON reports.

pub mod concentration;
pub mod diagnostics;
pub mod error;
pub mod harness;
pub mod optimizers;
pub mod problems;
pub mod rng;
pub mod samplers;
pub(crate) mod vecmath;

pub use error::Error;

/// Crate-wide result type.
pub type Result<T> = std::result::Result<T, Error>;

/// Schema version stamped into every JSON artifact this crate emits.
pub const SCHEMA_VERSION: u32 = 1;
