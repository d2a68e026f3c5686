//! The iteration driver `x_{k+1} = x_k − α·g_k` over the five estimators.

mod memory;
mod trace;

pub use memory::{
    estimate_gradient, sag_enumeration_oracle, saga_unbiasedness_oracle, Algorithm, GradientMemory,
};
pub use trace::{RunTrace, TraceRow, TRACE_CSV_HEADER};

use crate::concentration::{staleness_bound_iid, staleness_bound_markov};
use crate::diagnostics::LyapunovState;
use crate::error::Error;
use crate::problems::FiniteSumProblem;
use crate::samplers::Sampler;
use crate::vecmath::{all_finite, norm, norm_sq};
use crate::Result;
use serde::{Deserialize, Serialize};

/// Iterates are declared divergent past this norm.
pub const DIVERGENCE_RADIUS: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepSizeMode {
    Theory,
    Manual,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TauMode {
    Theory,
    Manual,
}

/// Run parameters. In theory mode the step size resolves to `1/L` for GD,
/// `μ/(2L²)` for SGD, and `1/(16Lτ)` for the memory estimators; the window
/// resolves to the concentration bound for stochastic samplers and to the
/// certified delay for deterministic ones.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub algorithm: Algorithm,
    pub step_size_mode: StepSizeMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_size: Option<f64>,
    pub tau_mode: TauMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<usize>,
    pub iterations: usize,
    pub delta: f64,
    #[serde(default)]
    pub burn_in_freeze: bool,
    #[serde(default = "default_true")]
    pub record_trace: bool,
}

fn default_true() -> bool {
    true
}

impl RunConfig {
    /// Fully theory-driven configuration.
    pub fn theory(algorithm: Algorithm, iterations: usize, delta: f64) -> Self {
        Self {
            algorithm,
            step_size_mode: StepSizeMode::Theory,
            step_size: None,
            tau_mode: TauMode::Theory,
            tau: None,
            iterations,
            delta,
            burn_in_freeze: false,
            record_trace: true,
        }
    }

    /// Manual step size and window.
    pub fn manual(algorithm: Algorithm, step_size: f64, tau: usize, iterations: usize) -> Self {
        Self {
            algorithm,
            step_size_mode: StepSizeMode::Manual,
            step_size: Some(step_size),
            tau_mode: TauMode::Manual,
            tau: Some(tau),
            iterations,
            delta: 0.05,
            burn_in_freeze: false,
            record_trace: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "delta = {} must lie in (0, 1)",
                self.delta
            )));
        }
        if self.step_size_mode == StepSizeMode::Manual {
            match self.step_size {
                Some(a) if a > 0.0 => {}
                _ => {
                    return Err(Error::InvalidArgument(
                        "manual step_size must be positive".into(),
                    ))
                }
            }
        }
        if self.tau_mode == TauMode::Manual {
            match self.tau {
                Some(t) if t >= 1 => {}
                _ => return Err(Error::InvalidArgument("manual tau must be >= 1".into())),
            }
        }
        Ok(())
    }
}

/// Resolve the staleness window for a run.
pub fn resolve_tau(config: &RunConfig, sampler: &Sampler) -> Result<usize> {
    config.validate()?;
    match config.tau_mode {
        TauMode::Manual => Ok(config.tau.expect("validated")),
        TauMode::Theory => {
            if let Some(certified) = sampler.certified_tau() {
                return Ok(certified);
            }
            let horizon = config.iterations.max(1);
            match sampler.mixing() {
                Some(mixing) => staleness_bound_markov(
                    mixing.t_mix,
                    mixing.pi_min,
                    sampler.n_components(),
                    horizon,
                    config.delta,
                ),
                None => staleness_bound_iid(sampler.n_components(), horizon, config.delta),
            }
        }
    }
}

/// Resolve the step size, given the already-resolved window.
pub fn resolve_alpha(config: &RunConfig, problem: &FiniteSumProblem, tau: usize) -> Result<f64> {
    config.validate()?;
    match config.step_size_mode {
        StepSizeMode::Manual => Ok(config.step_size.expect("validated")),
        StepSizeMode::Theory => {
            let l = problem.metadata().smoothness;
            match config.algorithm {
                Algorithm::Gd => Ok(1.0 / l),
                Algorithm::Sgd => {
                    let mu = problem.metadata().strong_convexity;
                    if mu <= 0.0 {
                        return Err(Error::InvalidCombination(
                            "theory SGD step size needs strong convexity".into(),
                        ));
                    }
                    Ok(mu / (2.0 * l * l))
                }
                Algorithm::Sag | Algorithm::Saga | Algorithm::Iag => {
                    Ok(1.0 / (16.0 * l * tau as f64))
                }
            }
        }
    }
}

/// Execute one run from `x_0 = 0`.
///
/// With `record_trace` set, every iteration is instrumented: sub-optimality
/// and the full gradient at `x_k`, the estimator error `e_k = g_k − ∇f(x_k)`,
/// memory staleness, and the window quantities `U`, `W`, `V`. Without it only
/// the staleness bookkeeping, divergence guard, and final sub-optimality are
/// kept, for timing-oriented runs.
///
/// With `burn_in_freeze`, iterations `k < τ` evaluate `∇f_{i_k}(x_k)` and
/// update the memory but do not move `x`; rows record the applied direction
/// (zero) during that phase, so the window sums measure actual movement.
pub fn run(
    problem: &FiniteSumProblem,
    sampler: &mut Sampler,
    config: &RunConfig,
) -> Result<RunTrace> {
    if sampler.n_components() != problem.n_components() {
        return Err(Error::InvalidArgument(format!(
            "sampler over {} components but problem has {}",
            sampler.n_components(),
            problem.n_components()
        )));
    }
    let tau = resolve_tau(config, sampler)?;
    let alpha = resolve_alpha(config, problem, tau)?;
    let n = problem.n_components();
    let d = problem.dimension();
    let smoothness = problem.metadata().smoothness;
    let record = config.record_trace;

    let mut x = vec![0.0; d];
    let mut memory = GradientMemory::new(n, d);
    let mut lyapunov = LyapunovState::new(tau, alpha, smoothness);
    let mut rows = Vec::with_capacity(if record { config.iterations } else { 0 });
    let mut x_norms = Vec::with_capacity(if record { config.iterations + 1 } else { 0 });
    let mut good_event_held = true;
    let mut max_staleness_overall = 0usize;

    for k in 0..config.iterations {
        let staleness = memory.max_staleness(k);
        max_staleness_overall = max_staleness_overall.max(staleness);
        if staleness > tau {
            good_event_held = false;
        }

        let sampled_index = if config.algorithm == Algorithm::Gd {
            None
        } else {
            Some(sampler.next_index())
        };

        let frozen = config.burn_in_freeze && k < tau;
        let g = if frozen {
            if config.algorithm.uses_memory() {
                let i_k = sampled_index.expect("memory algorithms sample an index");
                let fresh = problem.component_gradient(i_k, &x);
                if !all_finite(&fresh) {
                    return Err(Error::NumericalFault {
                        index: i_k,
                        detail: "non-finite component gradient".into(),
                    });
                }
                memory.refresh(i_k, &fresh, k);
            }
            vec![0.0; d]
        } else {
            estimate_gradient(
                config.algorithm,
                problem,
                &mut memory,
                &x,
                sampled_index.unwrap_or(0),
                k,
            )?
        };

        if record {
            let full_grad = problem.full_gradient(&x)?;
            let r = problem.suboptimality(&x);
            let err_norm_sq = g
                .iter()
                .zip(&full_grad)
                .map(|(gi, fi)| (gi - fi) * (gi - fi))
                .sum();
            rows.push(TraceRow {
                k,
                r,
                grad_norm_sq: norm_sq(&full_grad),
                est_norm_sq: norm_sq(&g),
                err_norm_sq,
                max_staleness: staleness,
                u: lyapunov.u(),
                w: lyapunov.w(),
                v: lyapunov.v(r),
                sampled_index: sampled_index.map_or(-1, |i| i as i64),
            });
            x_norms.push(norm(&x));
        }

        for (xi, gi) in x.iter_mut().zip(&g) {
            *xi -= alpha * gi;
        }
        if !all_finite(&x) || norm(&x) > DIVERGENCE_RADIUS {
            return Err(Error::Divergence {
                iteration: k,
                detail: format!("iterate norm {}", norm(&x)),
            });
        }
        lyapunov.push_gradient(norm_sq(&g))?;
    }

    if record {
        x_norms.push(norm(&x));
    }
    let final_r = problem.suboptimality(&x);
    let (base_seed, replicate) = sampler.seed();
    Ok(RunTrace {
        rows,
        x_norms,
        final_r,
        final_x: x,
        iterations: config.iterations,
        algorithm: config.algorithm,
        resolved_alpha: alpha,
        resolved_tau: tau,
        good_event_held,
        max_staleness_overall,
        base_seed,
        replicate,
        rng: crate::rng::RNG_NAME,
        sampler_kind: sampler.kind_name().to_string(),
        stationary_start: sampler.stationary_start(),
        burn_in_freeze: config.burn_in_freeze,
    })
}

#[cfg(test)]
mod tests;
