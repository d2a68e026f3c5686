//! The builtin verification battery.
//!
//! Fourteen predicate-based criteria covering the estimator algebra, the
//! per-iteration inequality checks, burn-in, the final-rate envelopes in all
//! three sampling regimes, and the concentration formulas. Every constant and
//! tolerance is pinned here; the battery is fully deterministic (fixed seeds)
//! and runs in well under three minutes on commodity hardware.
//!
//! `vrgrad verify` with no config runs exactly this battery, and the
//! acceptance test target asserts every criterion.

use super::ExperimentConfig;
use crate::concentration::{
    monte_carlo_staleness, staleness_bound_iid, staleness_bound_markov, MonteCarloOptions,
};
use crate::diagnostics::{
    check_burn_in, prior_iag_exponent, rate_envelope, scan_contraction, scan_descent,
    scan_envelope, scan_gd_rate, scan_gradient_bound, scan_gradient_error, scan_monotone_v,
    scan_nonconvex_average, theory_exponent, EnvelopeKind, LyapunovState,
};
use crate::optimizers::{
    run, sag_enumeration_oracle, saga_unbiasedness_oracle, Algorithm, GradientMemory, RunConfig,
    RunTrace,
};
use crate::problems::{
    check_gradients, make_logistic, make_nonconvex, make_quadratic, quadratic_pair_1d,
    FiniteSumProblem,
};
use crate::samplers::{analyze_mixing, Sampler, SamplerSpec};
use crate::vecmath::{norm, sub};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

/// Outcome of one acceptance criterion.
#[derive(Debug, Clone, Serialize)]
pub struct CriterionResult {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CriterionResult {
    fn new(id: usize, name: &'static str, passed: bool, detail: String) -> Self {
        Self {
            id,
            name,
            passed,
            detail,
        }
    }
}

fn lazy_two_state() -> Vec<Vec<f64>> {
    vec![vec![0.9, 0.1], vec![0.1, 0.9]]
}

fn run_seeds(
    problem: &FiniteSumProblem,
    spec: &SamplerSpec,
    config: &RunConfig,
    base_seed: u64,
    seeds: usize,
) -> Vec<RunTrace> {
    (0..seeds)
        .into_par_iter()
        .map(|rep| {
            let mut sampler = Sampler::new(spec, problem.n_components(), base_seed, rep as u64)
                .expect("sampler spec is valid");
            run(problem, &mut sampler, config).expect("acceptance run must not diverge")
        })
        .collect()
}

fn criterion_1_unbiasedness() -> CriterionResult {
    let p = make_quadratic(20, 5, 10.0, 7).expect("builtin problem");
    let mut rng = crate::rng::seeded_rng(1001);
    let mut worst_saga = 0.0_f64;
    let mut best_sag_gap = 0.0_f64;
    for _ in 0..20 {
        let mut memory = GradientMemory::new(20, 5);
        for i in 0..20 {
            let y: Vec<f64> = (0..5).map(|_| rng.random_range(-2.0..2.0)).collect();
            memory.refresh(i, &p.component_gradient(i, &y), 0);
        }
        let x: Vec<f64> = (0..5).map(|_| rng.random_range(-2.0..2.0)).collect();
        let full = p.full_gradient(&x).expect("finite");
        let saga = saga_unbiasedness_oracle(&p, &memory, &x).expect("finite");
        worst_saga = worst_saga.max(norm(&sub(&saga, &full)) / norm(&full).max(1e-300));
        let sag = sag_enumeration_oracle(&p, &memory, &x).expect("finite");
        best_sag_gap = best_sag_gap.max(norm(&sub(&sag, &full)));
    }
    let passed = worst_saga <= 1e-10 && best_sag_gap > 1e-6;
    CriterionResult::new(
        1,
        "saga_unbiasedness_and_sag_bias",
        passed,
        format!("saga max rel dev {worst_saga:.2e}; sag max abs bias {best_sag_gap:.2e}"),
    )
}

fn criterion_2_descent() -> CriterionResult {
    let p = make_quadratic(20, 5, 10.0, 7).expect("builtin problem");
    let alpha = 1.0 / (4.0 * p.metadata().smoothness);
    let mut passed = true;
    let mut detail = String::new();
    for algorithm in [Algorithm::Sag, Algorithm::Saga] {
        let config = RunConfig::manual(algorithm, alpha, 80, 5000);
        let traces = run_seeds(&p, &SamplerSpec::IidUniform, &config, 2001, 5);
        let mut merged_checked = 0usize;
        for trace in &traces {
            let outcome = scan_descent(trace, alpha);
            merged_checked += outcome.checked;
            if !outcome.passed {
                passed = false;
                detail.push_str(&format!(
                    "{} violates descent at k={:?}; ",
                    algorithm.name(),
                    outcome.first_violation_k
                ));
            }
        }
        detail.push_str(&format!(
            "{}: {merged_checked} steps ok; ",
            algorithm.name()
        ));
    }
    CriterionResult::new(2, "approximate_descent", passed, detail)
}

fn lemma_window_runs() -> (FiniteSumProblem, Vec<(Algorithm, Vec<RunTrace>)>) {
    let p = make_quadratic(20, 5, 10.0, 7).expect("builtin problem");
    let tau = 80;
    let alpha = 1.0 / (16.0 * p.metadata().smoothness * tau as f64);
    let runs = [Algorithm::Sag, Algorithm::Saga]
        .into_iter()
        .map(|algorithm| {
            let config = RunConfig::manual(algorithm, alpha, tau, 120);
            (
                algorithm,
                run_seeds(&p, &SamplerSpec::IidUniform, &config, 3001, 50),
            )
        })
        .collect();
    (p, runs)
}

fn criterion_3_gradient_error() -> CriterionResult {
    let (p, runs) = lemma_window_runs();
    let l = p.metadata().smoothness;
    let mut passed = true;
    let mut detail = String::new();
    for (algorithm, traces) in &runs {
        let good: Vec<_> = traces.iter().filter(|t| t.good_event_held).collect();
        let mut violations = 0usize;
        for trace in &good {
            let err = scan_gradient_error(trace, l, trace.resolved_alpha, trace.resolved_tau);
            let bound = scan_gradient_bound(trace, l, trace.resolved_alpha, trace.resolved_tau);
            if !err.passed || !bound.passed {
                violations += 1;
            }
        }
        if violations > 0 || good.is_empty() {
            passed &= violations == 0;
        }
        detail.push_str(&format!(
            "{}: {} good-event runs of {}, {violations} violations; ",
            algorithm.name(),
            good.len(),
            traces.len()
        ));
    }
    CriterionResult::new(3, "gradient_error_and_bound_on_good_event", passed, detail)
}

fn criterion_4_contraction() -> CriterionResult {
    let (p, runs) = lemma_window_runs();
    let mu = p.metadata().strong_convexity;
    let mut passed = true;
    let mut detail = String::new();
    for (algorithm, traces) in &runs {
        let good: Vec<_> = traces.iter().filter(|t| t.good_event_held).collect();
        let mut violations = 0usize;
        for trace in &good {
            let contraction = scan_contraction(trace, mu, trace.resolved_alpha, trace.resolved_tau);
            let monotone = scan_monotone_v(trace, trace.resolved_tau);
            if !contraction.passed || !monotone.passed {
                violations += 1;
            }
        }
        passed &= violations == 0;
        detail.push_str(&format!(
            "{}: {} good-event runs, {violations} violations; ",
            algorithm.name(),
            good.len()
        ));
    }
    CriterionResult::new(4, "lyapunov_contraction_and_monotonicity", passed, detail)
}

fn criterion_5_burn_in() -> CriterionResult {
    let p = quadratic_pair_1d();
    let l = p.metadata().smoothness;
    let b = p.metadata().radius_b;
    let x_star_norm = norm(&p.metadata().minimizer);
    let mut passed = true;
    let mut detail = String::new();
    for freeze in [false, true] {
        let radius = if freeze { x_star_norm } else { b };
        for algorithm in [Algorithm::Sag, Algorithm::Saga] {
            let mut config = RunConfig::theory(algorithm, 300, 0.05);
            config.burn_in_freeze = freeze;
            let traces = run_seeds(&p, &SamplerSpec::IidUniform, &config, 5001, 50);
            let mut failures = 0usize;
            for trace in &traces {
                let report =
                    check_burn_in(trace, l, radius, trace.resolved_tau).expect("trace long enough");
                if !report.passed {
                    failures += 1;
                }
            }
            passed &= failures == 0;
            detail.push_str(&format!(
                "{}{}: {failures}/50 failures (tau={}); ",
                algorithm.name(),
                if freeze { "+freeze" } else { "" },
                traces[0].resolved_tau
            ));
        }
    }
    CriterionResult::new(5, "burn_in_bounds", passed, detail)
}

fn criterion_6_iag_envelope() -> CriterionResult {
    let p = make_quadratic(10, 5, 10.0, 6).expect("builtin problem");
    let l = p.metadata().smoothness;
    let tau = 10;
    let config = RunConfig::manual(Algorithm::Iag, 1.0 / (160.0 * l), tau, 200_000);
    let mut sampler = Sampler::new(&SamplerSpec::Cyclic, 10, 6001, 0).expect("cyclic sampler");
    let trace = run(&p, &mut sampler, &config).expect("deterministic run");
    let envelope = rate_envelope(EnvelopeKind::Iag, p.metadata(), tau, 200_000).expect("kappa set");
    let outcome = scan_envelope(&trace, &envelope);
    let passed = trace.good_event_held && outcome.passed;
    CriterionResult::new(
        6,
        "iag_deterministic_envelope",
        passed,
        format!(
            "good_event={}, checked {} iterates, final r {:.3e} vs bound {:.3e}",
            trace.good_event_held,
            outcome.checked,
            trace.final_r,
            envelope.bound(200_000)
        ),
    )
}

fn criterion_7_stochastic_envelope() -> CriterionResult {
    let p = make_quadratic(20, 5, 10.0, 7).expect("builtin problem");
    let horizon = 2000;
    let tau = staleness_bound_iid(20, horizon, 0.05).expect("valid formula inputs");
    let envelope =
        rate_envelope(EnvelopeKind::StronglyConvex, p.metadata(), tau, horizon).expect("kappa set");
    let mut passed = true;
    let mut detail = format!("theory tau={tau}; ");
    for algorithm in [Algorithm::Sag, Algorithm::Saga] {
        let config = RunConfig::theory(algorithm, horizon, 0.05);
        let traces = run_seeds(&p, &SamplerSpec::IidUniform, &config, 7001, 100);
        let good: Vec<_> = traces.iter().filter(|t| t.good_event_held).collect();
        let mut violations = 0usize;
        for trace in &good {
            if !scan_envelope(trace, &envelope).passed {
                violations += 1;
            }
        }
        passed &= good.len() >= 90 && violations == 0;
        detail.push_str(&format!(
            "{}: {}/100 good, {violations} envelope violations; ",
            algorithm.name(),
            good.len()
        ));
    }
    CriterionResult::new(7, "stochastic_high_probability_envelope", passed, detail)
}

fn criterion_8_nonconvex() -> CriterionResult {
    let p = make_nonconvex(10, 3, 8).expect("builtin problem");
    let l = p.metadata().smoothness;
    let tau = 40;
    let alpha = 1.0 / (16.0 * l * tau as f64);
    let horizon = 320;
    let envelope =
        rate_envelope(EnvelopeKind::NonConvex, p.metadata(), tau, horizon).expect("nonconvex");
    let mut passed = true;
    let mut detail = String::new();
    for algorithm in [Algorithm::Sag, Algorithm::Saga] {
        let config = RunConfig::manual(algorithm, alpha, tau, horizon);
        let traces = run_seeds(&p, &SamplerSpec::IidUniform, &config, 8005, 50);
        let good: Vec<_> = traces.iter().filter(|t| t.good_event_held).collect();
        let mut violations = 0usize;
        for trace in &good {
            if !scan_nonconvex_average(trace, &envelope).passed {
                violations += 1;
            }
        }
        passed &= violations == 0;
        detail.push_str(&format!(
            "{}: {} good-event runs of 50, {violations} violations; ",
            algorithm.name(),
            good.len()
        ));
    }
    CriterionResult::new(8, "nonconvex_running_average_bound", passed, detail)
}

fn criterion_9_iid_concentration() -> CriterionResult {
    let n = 10;
    let horizon = 500;
    let delta = 0.1;
    let report = monte_carlo_staleness(
        &SamplerSpec::IidUniform,
        &MonteCarloOptions {
            n,
            horizon,
            delta,
            tau: None,
            replications: 1000,
            base_seed: 9026,
            window_grid: Some(vec![1, 2, 5, 10, 20, 40, 80, 160]),
        },
    )
    .expect("valid options");
    let mut passed = report.tau_used == staleness_bound_iid(n, horizon, delta).unwrap()
        && report.good_event_frequency >= 1.0 - delta;
    let mut worst_exact_gap = 0.0_f64;
    for point in &report.tail_curve {
        let exact = (1.0 - 1.0 / n as f64).powi(point.tau_candidate as i32);
        let exact_ok = (point.empirical_tail - exact).abs() <= point.confidence_halfwidth;
        let tail_ok = point.empirical_tail <= point.analytic_tail + point.confidence_halfwidth;
        worst_exact_gap = worst_exact_gap.max((point.empirical_tail - exact).abs());
        passed &= exact_ok && tail_ok;
    }
    CriterionResult::new(
        9,
        "iid_staleness_concentration",
        passed,
        format!(
            "tau={}, good freq {:.3}, worst |emp-exact| {:.3e}",
            report.tau_used, report.good_event_frequency, worst_exact_gap
        ),
    )
}

fn criterion_10_markov() -> CriterionResult {
    let chain = lazy_two_state();
    let mixing = match analyze_mixing(&chain, 100) {
        Ok(m) => m,
        Err(e) => {
            return CriterionResult::new(
                10,
                "markov_sampling",
                false,
                format!("mixing failed: {e}"),
            )
        }
    };
    let mut passed = mixing.t_mix == 4
        && (mixing.stationary[0] - 0.5).abs() <= 1e-10
        && (mixing.stationary[1] - 0.5).abs() <= 1e-10
        && (mixing.pi_min - 0.5).abs() <= 1e-10;
    for (idx, d) in mixing.d_mix.iter().enumerate() {
        passed &= (d - 0.5 * 0.8_f64.powi(idx as i32 + 1)).abs() <= 1e-12;
    }

    let tau = staleness_bound_markov(4, 0.5, 2, 500, 0.1).expect("valid formula inputs");
    passed &= tau == 6485;

    let spec = SamplerSpec::Markov {
        transition: chain,
        start_state: None,
    };
    let report = monte_carlo_staleness(
        &spec,
        &MonteCarloOptions {
            n: 2,
            horizon: 500,
            delta: 0.1,
            tau: Some(tau),
            replications: 1000,
            base_seed: 10001,
            window_grid: None,
        },
    )
    .expect("valid options");
    passed &= report.good_event_frequency >= 0.9;

    // A SAGA run under the chain, long enough that the envelope domain
    // (k > tau) is non-empty.
    let p = quadratic_pair_1d();
    let horizon = 7000;
    let alpha = 1.0 / (16.0 * p.metadata().smoothness * tau as f64);
    let config = RunConfig::manual(Algorithm::Saga, alpha, tau, horizon);
    let traces = run_seeds(&p, &spec, &config, 10002, 5);
    let envelope = rate_envelope(EnvelopeKind::Markov, p.metadata(), tau, horizon).expect("kappa");
    let good: Vec<_> = traces.iter().filter(|t| t.good_event_held).collect();
    let mut violations = 0usize;
    for trace in &good {
        if !scan_envelope(trace, &envelope).passed {
            violations += 1;
        }
    }
    passed &= !good.is_empty() && violations == 0;
    CriterionResult::new(
        10,
        "markov_sampling",
        passed,
        format!(
            "t_mix={}, tau={tau}, mc freq {:.3}, saga {}good runs / {violations} violations",
            mixing.t_mix,
            report.good_event_frequency,
            good.len()
        ),
    )
}

fn criterion_11_gd_rate() -> CriterionResult {
    let p = make_quadratic(20, 5, 10.0, 7).expect("builtin problem");
    let config = RunConfig::theory(Algorithm::Gd, 500, 0.05);
    let mut sampler = Sampler::new(&SamplerSpec::IidUniform, 20, 11001, 0).expect("sampler");
    let trace = run(&p, &mut sampler, &config).expect("gd run");
    let outcome = scan_gd_rate(&trace, p.metadata().condition_number.expect("kappa"));
    CriterionResult::new(
        11,
        "gd_rate_sanity",
        outcome.passed,
        format!(
            "checked {} iterates, min margin {:.3e}",
            outcome.checked, outcome.margin_min
        ),
    )
}

fn criterion_12_window_fuzz() -> CriterionResult {
    let tau = 37;
    let mut state = LyapunovState::new(tau, 0.01, 1.0);
    let mut rng = crate::rng::seeded_rng(12001);
    let mut worst_rel = 0.0_f64;
    let mut cap_ok = true;
    for _ in 0..10_000 {
        state
            .push_gradient(rng.random_range(0.0..10.0))
            .expect("nonnegative");
        let (u, w) = state.recompute();
        worst_rel = worst_rel.max((u - state.u()).abs() / u.max(1.0));
        worst_rel = worst_rel.max((w - state.w()).abs() / w.max(1.0));
        cap_ok &= state.w() <= tau as f64 * state.u() + 1e-10 * state.u().max(1.0);
    }
    let passed = worst_rel <= 1e-9 && cap_ok;
    CriterionResult::new(
        12,
        "window_bookkeeping_fuzz",
        passed,
        format!("worst rel drift {worst_rel:.2e}, cap ok = {cap_ok}"),
    )
}

fn criterion_13_exponent_improvement() -> CriterionResult {
    let mut passed = true;
    let mut min_ratio = f64::INFINITY;
    for kappa in [2.0, 5.0, 10.0, 20.0] {
        for tau in [2usize, 5, 10, 20] {
            let ours = theory_exponent(kappa, tau);
            let prior = prior_iag_exponent(kappa, tau);
            passed &= ours > prior;
            min_ratio = min_ratio.min(ours / prior);
        }
    }
    CriterionResult::new(
        13,
        "iag_rate_improvement",
        passed,
        format!("min exponent ratio over grid {min_ratio:.3}"),
    )
}

fn criterion_14_gradcheck() -> CriterionResult {
    let problems: Vec<(&str, FiniteSumProblem)> = vec![
        (
            "quadratic",
            make_quadratic(20, 5, 10.0, 7).expect("builtin"),
        ),
        ("logistic", make_logistic(10, 3, 0.1, 1).expect("builtin")),
        ("nonconvex", make_nonconvex(10, 3, 5).expect("builtin")),
    ];
    let mut passed = true;
    let mut detail = String::new();
    for (name, p) in &problems {
        let report = check_gradients(p, 100, 14001);
        passed &= report.passed;
        detail.push_str(&format!("{name}: {:.2e}; ", report.max_rel_error));
    }
    CriterionResult::new(14, "finite_difference_gradient_checks", passed, detail)
}

/// Run the full battery in order.
pub fn run_acceptance_suite() -> Vec<CriterionResult> {
    vec![
        criterion_1_unbiasedness(),
        criterion_2_descent(),
        criterion_3_gradient_error(),
        criterion_4_contraction(),
        criterion_5_burn_in(),
        criterion_6_iag_envelope(),
        criterion_7_stochastic_envelope(),
        criterion_8_nonconvex(),
        criterion_9_iid_concentration(),
        criterion_10_markov(),
        criterion_11_gd_rate(),
        criterion_12_window_fuzz(),
        criterion_13_exponent_improvement(),
        criterion_14_gradcheck(),
    ]
}

/// A ready-made config for the default quadratic verification suite
/// (used by the CLI when a config-driven verify is requested without a file).
pub fn default_experiment() -> ExperimentConfig {
    super::parse_experiment(
        r#"{
            "problem": {"family": "quadratic", "n": 20, "d": 5, "kappa": 10.0, "seed": 7},
            "sampler": {"kind": "iid_uniform"},
            "run": {
                "algorithm": "saga",
                "step_size_mode": "theory",
                "tau_mode": "theory",
                "iterations": 2000,
                "delta": 0.05
            },
            "replications": 20,
            "base_seed": 42
        }"#,
    )
    .expect("builtin config is valid")
}
