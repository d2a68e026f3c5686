//! Finite-sum objectives `f(x) = (1/N) Σ_i f_i(x)` with analytic metadata.
//!
//! Three builtin families are provided, chosen so that every constant the
//! convergence analysis consumes (per-component smoothness `L`, strong
//! convexity `μ` of the average, minimizers, and the radius
//! `B = max{‖x*‖, ‖x_1*‖, …, ‖x_N*‖}`) is either exact by construction or
//! produced by a high-accuracy reference solve that is independent of the
//! optimizers under test:
//!
//! - [`make_quadratic`]: random SPD quadratics sharing an eigenbasis, so the
//!   spectrum of the average Hessian is controlled exactly.
//! - [`make_logistic`]: ℓ2-regularized logistic regression on synthetic data;
//!   minimizers come from a damped Newton reference solve.
//! - [`make_nonconvex`]: separable sums of the bounded-curvature well
//!   `φ(t) = t²/(1+t²)`, smooth with `|φ''| ≤ 2` and non-convex.

mod logistic;
mod nonconvex;
mod quadratic;

pub use logistic::{logistic_from_data, make_logistic};
pub use nonconvex::{
    make_nonconvex, nonconvex_from_centers, well_first_derivative, well_second_derivative,
};
pub use quadratic::{
    make_quadratic, quadratic_from_parts, quadratic_from_parts_with_constants, quadratic_pair_1d,
};

use crate::error::Error;
use crate::vecmath::{all_finite, norm, norm_sq, sub};
use crate::Result;
use rand::Rng;
use serde::Serialize;
use std::sync::Arc;

/// Analytic constants attached to a [`FiniteSumProblem`].
#[derive(Debug, Clone, Serialize)]
pub struct ProblemMetadata {
    /// Per-component smoothness constant `L` (max over components).
    pub smoothness: f64,
    /// Strong convexity modulus `μ` of the average; `0` flags non-convex.
    pub strong_convexity: f64,
    /// Minimizer `x*` of the average.
    pub minimizer: Vec<f64>,
    /// `f(x*)`.
    pub optimal_value: f64,
    /// Minimizers `x_i*` of the individual components.
    pub component_minimizers: Vec<Vec<f64>>,
    /// `B = max{‖x*‖, ‖x_1*‖, …, ‖x_N*‖}`.
    pub radius_b: f64,
    /// `κ = L/μ`, defined only when `μ > 0`.
    pub condition_number: Option<f64>,
}

impl ProblemMetadata {
    /// Recompute `B` from the stored minimizers.
    pub fn derived_radius(&self) -> f64 {
        self.component_minimizers
            .iter()
            .map(|m| norm(m))
            .fold(norm(&self.minimizer), f64::max)
    }
}

/// Value/gradient oracles for the components of a finite sum.
///
/// Implementations must be pure: same `(i, x)` in, same numbers out.
pub trait ComponentOracle: Send + Sync {
    fn gradient(&self, i: usize, x: &[f64], out: &mut [f64]);
    fn value(&self, i: usize, x: &[f64]) -> f64;
}

/// A finite-sum objective with `N` smooth components in `R^d`.
///
/// Immutable after construction; cheap to clone and safe to share across
/// concurrent runs.
#[derive(Clone)]
pub struct FiniteSumProblem {
    n_components: usize,
    dimension: usize,
    oracle: Arc<dyn ComponentOracle>,
    metadata: ProblemMetadata,
}

impl std::fmt::Debug for FiniteSumProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FiniteSumProblem")
            .field("n_components", &self.n_components)
            .field("dimension", &self.dimension)
            .field("metadata", &self.metadata)
            .finish()
    }
}

impl FiniteSumProblem {
    /// Assemble a problem from an oracle plus metadata, validating the
    /// metadata invariants (`B` consistent with the minimizers, `κ ≥ 1`,
    /// near-zero gradient at the claimed minimizer).
    pub fn new(
        n_components: usize,
        dimension: usize,
        oracle: Arc<dyn ComponentOracle>,
        metadata: ProblemMetadata,
    ) -> Result<Self> {
        if n_components == 0 || dimension == 0 {
            return Err(Error::InvalidArgument(
                "need at least one component and one dimension".into(),
            ));
        }
        if metadata.smoothness <= 0.0 {
            return Err(Error::InvalidArgument("smoothness must be positive".into()));
        }
        if metadata.strong_convexity < 0.0 {
            return Err(Error::InvalidArgument(
                "strong convexity must be nonnegative".into(),
            ));
        }
        if let Some(kappa) = metadata.condition_number {
            if kappa < 1.0 {
                return Err(Error::InvalidArgument(format!(
                    "condition number {kappa} < 1"
                )));
            }
        }
        let problem = Self {
            n_components,
            dimension,
            oracle,
            metadata,
        };
        let derived = problem.metadata.derived_radius();
        if (derived - problem.metadata.radius_b).abs() > 1e-9 * derived.max(1.0) {
            return Err(Error::InvalidArgument(format!(
                "radius_b {} inconsistent with minimizers (derived {derived})",
                problem.metadata.radius_b
            )));
        }
        let grad_at_min = problem.full_gradient(&problem.metadata.minimizer)?;
        let tol = 1e-9 * (problem.metadata.smoothness * problem.metadata.radius_b).max(1.0);
        if norm(&grad_at_min) > tol {
            return Err(Error::InvalidArgument(format!(
                "gradient norm {} at claimed minimizer exceeds {tol}",
                norm(&grad_at_min)
            )));
        }
        Ok(problem)
    }

    pub fn n_components(&self) -> usize {
        self.n_components
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn metadata(&self) -> &ProblemMetadata {
        &self.metadata
    }

    /// `∇f_i(x)` written into `out`.
    pub fn component_gradient_into(&self, i: usize, x: &[f64], out: &mut [f64]) {
        debug_assert!(i < self.n_components);
        debug_assert_eq!(x.len(), self.dimension);
        self.oracle.gradient(i, x, out);
    }

    /// `∇f_i(x)`.
    pub fn component_gradient(&self, i: usize, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dimension];
        self.component_gradient_into(i, x, &mut out);
        out
    }

    /// `f_i(x)`.
    pub fn component_value(&self, i: usize, x: &[f64]) -> f64 {
        self.oracle.value(i, x)
    }

    /// `f(x) = (1/N) Σ_i f_i(x)`, accumulated in index order.
    pub fn value(&self, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.n_components {
            acc += self.oracle.value(i, x);
        }
        acc / self.n_components as f64
    }

    /// `f(x) - f(x*)`.
    pub fn suboptimality(&self, x: &[f64]) -> f64 {
        self.value(x) - self.metadata.optimal_value
    }

    /// The full gradient `(1/N) Σ_i ∇f_i(x)`, accumulated in index order.
    ///
    /// Fails with a component-identifying error if any component gradient
    /// comes back non-finite.
    pub fn full_gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut acc = vec![0.0; self.dimension];
        let mut buf = vec![0.0; self.dimension];
        for i in 0..self.n_components {
            self.oracle.gradient(i, x, &mut buf);
            if !all_finite(&buf) {
                return Err(Error::NumericalFault {
                    index: i,
                    detail: "non-finite component gradient".into(),
                });
            }
            for (a, g) in acc.iter_mut().zip(&buf) {
                *a += g;
            }
        }
        let inv_n = 1.0 / self.n_components as f64;
        for a in acc.iter_mut() {
            *a *= inv_n;
        }
        Ok(acc)
    }
}

/// Outcome of a finite-difference validation pass over random components and
/// points.
#[derive(Debug, Clone, Serialize)]
pub struct GradCheckReport {
    pub trials: usize,
    /// Max over trials of `‖g_analytic − g_fd‖ / max(1, ‖g_analytic‖)`.
    pub max_rel_error: f64,
    pub worst_component: usize,
    pub worst_trial: usize,
    /// `max_rel_error ≤ 1e-5`.
    pub passed: bool,
}

/// Central finite-difference step used by [`check_gradients`].
pub const FD_STEP: f64 = 1e-6;

/// Pass/fail threshold for [`check_gradients`].
pub const GRADCHECK_TOL: f64 = 1e-5;

/// Compare analytic component gradients against central finite differences
/// at random points. Failures are reported in the return value, never raised.
pub fn check_gradients(problem: &FiniteSumProblem, trials: usize, seed: u64) -> GradCheckReport {
    assert!(trials >= 1, "need at least one trial");
    let mut rng = crate::rng::seeded_rng(seed);
    let d = problem.dimension();
    let mut worst = (0.0_f64, 0usize, 0usize);
    for trial in 0..trials {
        let i = rng.random_range(0..problem.n_components());
        let x: Vec<f64> = (0..d).map(|_| rng.random_range(-1.5..1.5)).collect();
        let analytic = problem.component_gradient(i, &x);
        let mut fd = vec![0.0; d];
        let mut xp = x.clone();
        for j in 0..d {
            xp[j] = x[j] + FD_STEP;
            let up = problem.component_value(i, &xp);
            xp[j] = x[j] - FD_STEP;
            let dn = problem.component_value(i, &xp);
            xp[j] = x[j];
            fd[j] = (up - dn) / (2.0 * FD_STEP);
        }
        let rel = norm(&sub(&analytic, &fd)) / norm(&analytic).max(1.0);
        if rel > worst.0 {
            worst = (rel, i, trial);
        }
    }
    GradCheckReport {
        trials,
        max_rel_error: worst.0,
        worst_component: worst.1,
        worst_trial: worst.2,
        passed: worst.0 <= GRADCHECK_TOL,
    }
}

/// Smoothness probe: max over random pairs of `‖∇f_i(x)−∇f_i(y)‖ / ‖x−y‖`.
/// Used by tests to confirm the advertised `L`.
pub fn empirical_smoothness(problem: &FiniteSumProblem, pairs: usize, seed: u64) -> f64 {
    let mut rng = crate::rng::seeded_rng(seed);
    let d = problem.dimension();
    let mut worst: f64 = 0.0;
    for _ in 0..pairs {
        let i = rng.random_range(0..problem.n_components());
        let x: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
        let y: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
        let dist_sq = norm_sq(&sub(&x, &y));
        if dist_sq < 1e-20 {
            continue;
        }
        let gx = problem.component_gradient(i, &x);
        let gy = problem.component_gradient(i, &y);
        let ratio = (norm_sq(&sub(&gx, &gy)) / dist_sq).sqrt();
        worst = worst.max(ratio);
    }
    worst
}

#[cfg(test)]
mod tests;
