//! Config-driven verification: run fresh replications and evaluate every
//! applicable inequality from the analysis as a pass/fail verdict.
//!
//! Window-based lemma checks (gradient error, gradient bound, contraction,
//! monotone V) are conditioned on the measured good event: they are evaluated
//! on replications whose staleness stayed within the resolved `τ`, mirroring
//! the conditioning the statements carry. Non-good replications are reported
//! separately and counted against the `δ` budget. If no replication lands on
//! the good event the lemma checks fall back to evaluating everything, so a
//! deliberately broken configuration (e.g. `τ = 1`) reports concrete
//! violations rather than a vacuous pass.

use super::config::ExperimentConfig;
use super::execute_runs;
use crate::concentration::wilson_interval;
use crate::diagnostics::{
    check_burn_in, rate_envelope, scan_contraction, scan_descent, scan_envelope, scan_gd_rate,
    scan_gradient_bound, scan_gradient_error, scan_monotone_v, scan_nonconvex_average,
    scan_window_consistency, CheckOutcome, EnvelopeKind,
};
use crate::optimizers::{Algorithm, RunTrace};
use crate::problems::FiniteSumProblem;
use crate::Result;
use serde::Serialize;
use std::collections::BTreeMap;
use std::path::Path;

/// Verdict for one named check.
#[derive(Debug, Clone, Serialize)]
pub struct CheckVerdict {
    pub passed: bool,
    pub first_violation_k: Option<usize>,
    pub margin_min: f64,
    pub checked: usize,
}

impl From<CheckOutcome> for CheckVerdict {
    fn from(outcome: CheckOutcome) -> Self {
        Self {
            passed: outcome.passed,
            first_violation_k: outcome.first_violation_k,
            margin_min: if outcome.margin_min.is_finite() {
                outcome.margin_min
            } else {
                f64::MAX
            },
            checked: outcome.checked,
        }
    }
}

/// Good-event accounting across replications.
#[derive(Debug, Clone, Serialize)]
pub struct GoodEventSummary {
    pub replications: usize,
    pub good: usize,
    pub bad: usize,
    pub bad_fraction: f64,
    pub delta: f64,
    /// `bad_fraction ≤ δ + 95% Wilson half-width`.
    pub within_budget: bool,
}

/// Full verification report. Serialized with a stable key order.
#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub schema_version: u32,
    pub algorithm: String,
    pub resolved_alpha: f64,
    pub resolved_tau: usize,
    /// `good_event` when lemma checks ran on good replications only;
    /// `unconditioned_fallback` when none were good.
    pub conditioning: String,
    pub checks: BTreeMap<String, CheckVerdict>,
    pub good_event: GoodEventSummary,
    pub passed: bool,
}

fn merge_over<'a>(
    traces: impl Iterator<Item = &'a RunTrace>,
    scan: impl Fn(&RunTrace) -> CheckOutcome,
) -> CheckOutcome {
    let mut merged = CheckOutcome {
        passed: true,
        first_violation_k: None,
        margin_min: f64::INFINITY,
        checked: 0,
    };
    for trace in traces {
        merged.merge(&scan(trace));
    }
    merged
}

/// Run the experiment and evaluate every check that applies to its algorithm
/// and problem class. Tracing is forced on: the predicates read trace rows,
/// so a timing-oriented config must not silently verify vacuously.
pub fn verify_experiment(config: &ExperimentConfig, base_dir: &Path) -> Result<VerifyReport> {
    config.validate()?;
    let mut config = config.clone();
    config.run.record_trace = true;
    let problem = config.problem.build()?;
    let traces = execute_runs(&config, &problem, base_dir)?;
    Ok(evaluate_traces(&config, &problem, &traces))
}

/// Evaluate checks over already-executed traces.
pub fn evaluate_traces(
    config: &ExperimentConfig,
    problem: &FiniteSumProblem,
    traces: &[RunTrace],
) -> VerifyReport {
    let first = traces.first().expect("replications >= 1");
    let alpha = first.resolved_alpha;
    let tau = first.resolved_tau;
    let metadata = problem.metadata();
    let l = metadata.smoothness;
    let mu = metadata.strong_convexity;
    let algorithm = config.run.algorithm;

    // Good-event conditioning concerns the gradient-memory estimators; GD
    // refreshes nothing and SGD stores nothing, so their traces carry no
    // meaningful staleness notion.
    let conditioning_applies = algorithm.uses_memory();
    let good: Vec<&RunTrace> = if conditioning_applies {
        traces.iter().filter(|t| t.good_event_held).collect()
    } else {
        traces.iter().collect()
    };
    let bad = traces.len() - good.len();
    let conditioned: Vec<&RunTrace> = if good.is_empty() {
        traces.iter().collect()
    } else {
        good.clone()
    };
    let fallback = conditioning_applies && good.is_empty();

    let mut checks: BTreeMap<String, CheckVerdict> = BTreeMap::new();
    checks.insert(
        "window_bookkeeping".into(),
        merge_over(traces.iter(), |t| scan_window_consistency(t, tau)).into(),
    );

    match algorithm {
        Algorithm::Gd => {
            if let Some(kappa) = metadata.condition_number {
                checks.insert(
                    "gd_rate".into(),
                    merge_over(traces.iter(), |t| scan_gd_rate(t, kappa)).into(),
                );
            }
        }
        Algorithm::Sgd => {}
        Algorithm::Sag | Algorithm::Saga | Algorithm::Iag => {
            if alpha <= 1.0 / (4.0 * l) * (1.0 + 1e-12) {
                checks.insert(
                    "descent".into(),
                    merge_over(traces.iter(), |t| scan_descent(t, alpha)).into(),
                );
            }
            checks.insert(
                "gradient_error".into(),
                merge_over(conditioned.iter().copied(), |t| {
                    scan_gradient_error(t, l, alpha, tau)
                })
                .into(),
            );
            checks.insert(
                "gradient_bound".into(),
                merge_over(conditioned.iter().copied(), |t| {
                    scan_gradient_bound(t, l, alpha, tau)
                })
                .into(),
            );
            let theory_alpha = (alpha - 1.0 / (16.0 * l * tau as f64)).abs() <= 1e-12 * alpha;
            if mu > 0.0 {
                checks.insert(
                    "contraction".into(),
                    merge_over(conditioned.iter().copied(), |t| {
                        scan_contraction(t, mu, alpha, tau)
                    })
                    .into(),
                );
                checks.insert(
                    "monotone_v".into(),
                    merge_over(conditioned.iter().copied(), |t| scan_monotone_v(t, tau)).into(),
                );
                let kind = match first.sampler_kind.as_str() {
                    "markov" => EnvelopeKind::Markov,
                    "cyclic" | "custom_pattern" => EnvelopeKind::Iag,
                    _ => EnvelopeKind::StronglyConvex,
                };
                // A pinned Markov start state leaves the stationarity
                // hypothesis of the high-probability envelope.
                let hypotheses_hold = kind != EnvelopeKind::Markov || first.stationary_start;
                if theory_alpha && hypotheses_hold && config.run.iterations > tau {
                    if let Ok(env) = rate_envelope(kind, metadata, tau, config.run.iterations) {
                        checks.insert(
                            "rate_envelope".into(),
                            merge_over(conditioned.iter().copied(), |t| scan_envelope(t, &env))
                                .into(),
                        );
                    }
                }
            } else if theory_alpha && config.run.iterations >= 2 * tau {
                if let Ok(env) = rate_envelope(
                    EnvelopeKind::NonConvex,
                    metadata,
                    tau,
                    config.run.iterations,
                ) {
                    checks.insert(
                        "nonconvex_average".into(),
                        merge_over(conditioned.iter().copied(), |t| {
                            scan_nonconvex_average(t, &env)
                        })
                        .into(),
                    );
                }
            }
            if theory_alpha && first.rows.len() > tau {
                let radius = if config.run.burn_in_freeze {
                    metadata.minimizer.iter().map(|v| v * v).sum::<f64>().sqrt()
                } else {
                    metadata.radius_b
                };
                let mut merged = CheckOutcome {
                    passed: true,
                    first_violation_k: None,
                    margin_min: f64::INFINITY,
                    checked: 0,
                };
                for trace in traces {
                    if let Ok(report) = check_burn_in(trace, l, radius, tau) {
                        let mut outcome = CheckOutcome {
                            passed: report.passed,
                            first_violation_k: None,
                            margin_min: report.v_tau_bound - report.v_tau,
                            checked: 1,
                        };
                        if !report.passed {
                            outcome.first_violation_k = Some(tau);
                        }
                        merged.merge(&outcome);
                    }
                }
                if merged.checked > 0 {
                    checks.insert("burn_in".into(), merged.into());
                }
            }
        }
    }

    let bad_fraction = bad as f64 / traces.len() as f64;
    let (_, hi) = wilson_interval(bad as u64, traces.len() as u64);
    let within_budget =
        !conditioning_applies || bad_fraction <= config.run.delta + (hi - bad_fraction);
    let good_event = GoodEventSummary {
        replications: traces.len(),
        good: good.len(),
        bad,
        bad_fraction,
        delta: config.run.delta,
        within_budget,
    };

    let passed = checks.values().all(|c| c.passed) && within_budget && !fallback;
    VerifyReport {
        schema_version: crate::SCHEMA_VERSION,
        algorithm: algorithm.name().to_string(),
        resolved_alpha: alpha,
        resolved_tau: tau,
        conditioning: if !conditioning_applies {
            "not_applicable".into()
        } else if fallback {
            "unconditioned_fallback".into()
        } else {
            "good_event".into()
        },
        checks,
        good_event,
        passed,
    }
}
