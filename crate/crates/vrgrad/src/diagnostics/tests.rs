use super::*;
use crate::optimizers::{run, Algorithm, RunConfig};
use crate::problems::{make_quadratic, quadratic_pair_1d};
use crate::samplers::{Sampler, SamplerSpec};

fn sag_run(
    tau: usize,
    iterations: usize,
    seed: u64,
) -> (
    crate::problems::FiniteSumProblem,
    crate::optimizers::RunTrace,
) {
    let p = quadratic_pair_1d();
    let mut sampler = Sampler::new(&SamplerSpec::IidUniform, 2, seed, 0).unwrap();
    let alpha = 1.0 / (16.0 * tau as f64);
    let config = RunConfig::manual(Algorithm::Sag, alpha, tau, iterations);
    let trace = run(&p, &mut sampler, &config).unwrap();
    (p, trace)
}

#[test]
fn gradient_error_check_rejects_pre_window_rows() {
    let (_, trace) = sag_run(8, 20, 1);
    match check_gradient_error(&trace.rows[3], 1.0, trace.resolved_alpha, 8) {
        Err(crate::Error::OutOfWindow { k: 3, tau: 8 }) => {}
        other => panic!("expected out-of-window, got {other:?}"),
    }
    assert!(check_gradient_error(&trace.rows[8], 1.0, trace.resolved_alpha, 8).is_ok());
}

#[test]
fn gradient_error_predicate_sensitivity_control() {
    // A history sitting between the τ/4 bound and the τ bound: the check must
    // pass at τ and fail when τ is quartered.
    let row = crate::optimizers::TraceRow {
        k: 100,
        r: 0.1,
        grad_norm_sq: 1.0,
        est_norm_sq: 1.0,
        err_norm_sq: 2.0 * 0.01 * 0.01 * 16.0 * 10.0, // 2α²L²τU with α=0.01, τ=16, U=10
        max_staleness: 16,
        u: 10.0,
        w: 100.0,
        v: 0.2,
        sampled_index: 0,
    };
    assert!(check_gradient_error(&row, 1.0, 0.01, 16).unwrap());
    assert!(!check_gradient_error(&row, 1.0, 0.01, 4).unwrap());
}

#[test]
fn contraction_fixed_point_at_zero() {
    assert!(check_contraction(0.0, 0.0, 0.01, 1.0));
    assert!(!check_contraction(0.0, 1e-6, 0.01, 1.0));
    assert!(check_contraction(1.0, 1.0 - 0.01 * 0.25, 0.01, 1.0));
    assert!(!check_contraction(1.0, 1.0, 0.01, 1.0));
}

#[test]
fn burn_in_trivial_iterate_bound_at_origin() {
    let (p, trace) = sag_run(8, 40, 3);
    let report = check_burn_in(&trace, p.metadata().smoothness, p.metadata().radius_b, 8).unwrap();
    // x_0 = 0 always satisfies the iterate bound; the full predicates are
    // exercised in the acceptance suite over many seeds.
    assert!(trace.x_norms[0] == 0.0);
    assert!(report.v_tau_bound == 12.0); // 3LB² with L = 1, B = 2
    assert!(report.passed, "{report:?}");
}

#[test]
fn burn_in_requires_enough_trace() {
    let (p, trace) = sag_run(8, 5, 3);
    match check_burn_in(&trace, p.metadata().smoothness, 2.0, 8) {
        Err(crate::Error::InsufficientTrace {
            needed: 9,
            actual: 5,
        }) => {}
        other => panic!("expected insufficient trace, got {other:?}"),
    }
}

#[test]
fn strongly_convex_envelope_hand_value() {
    // κ=10, τ=10, L=1, B=2: bound(6400) = 24·(1−1/6400)^6400 ≈ 24·e⁻¹ ≈ 8.829.
    let p = quadratic_pair_1d();
    let mut metadata = p.metadata().clone();
    metadata.condition_number = Some(10.0);
    let env = rate_envelope(EnvelopeKind::StronglyConvex, &metadata, 10, 6400).unwrap();
    assert_eq!(env.valid_from(), 11);
    let bound = env.bound(6400);
    assert!((bound - 8.8285).abs() < 1e-3, "bound = {bound}");
    assert!((env.prefactor - 24.0).abs() < 1e-12);
}

#[test]
fn nonconvex_envelope_at_twice_tau() {
    // K = 2τ gives 768L²B²τ/(2τ) = 384L²B².
    let p = make_quadratic(4, 3, 2.0, 9).unwrap();
    let m = p.metadata();
    let tau = 12;
    let env = rate_envelope(EnvelopeKind::NonConvex, m, tau, 200).unwrap();
    assert_eq!(env.valid_from(), 2 * tau);
    let expected = 384.0 * m.smoothness * m.smoothness * m.radius_b * m.radius_b;
    let got = env.bound(2 * tau);
    assert!((got - expected).abs() <= 1e-12 * expected);
}

#[test]
fn envelope_needs_strong_convexity() {
    let p = crate::problems::make_nonconvex(3, 2, 1).unwrap();
    match rate_envelope(EnvelopeKind::StronglyConvex, p.metadata(), 4, 100) {
        Err(crate::Error::InvalidCombination(_)) => {}
        other => panic!("expected invalid combination, got {other:?}"),
    }
}

#[test]
fn exponent_comparison_hand_values() {
    // Ours: 1/6400 ≈ 1.5625e-4. Prior: 2·(2/5250)/121 ≈ 6.2967e-6.
    assert!((theory_exponent(10.0, 10) - 1.5625e-4).abs() < 1e-12);
    let prior = prior_iag_exponent(10.0, 10);
    assert!((prior - 6.296_733_569e-6).abs() < 1e-12, "prior = {prior}");
    assert!(theory_exponent(10.0, 10) > prior);
}

#[test]
fn improvement_holds_on_grid() {
    for kappa in [2.0, 5.0, 10.0, 20.0] {
        for tau in [2usize, 5, 10, 20] {
            assert!(
                theory_exponent(kappa, tau) > prior_iag_exponent(kappa, tau),
                "kappa = {kappa}, tau = {tau}"
            );
        }
    }
}

#[test]
fn gd_bound_shape() {
    assert_eq!(gd_rate_bound(2.0, 1.0, 0), 1.0);
    assert_eq!(gd_rate_bound(2.0, 1.0, 1), 0.5);
    assert!((gd_rate_bound(10.0, 3.0, 2) - 3.0 * 0.81).abs() < 1e-12);
}

#[test]
fn window_consistency_on_real_run() {
    let (_, trace) = sag_run(6, 300, 12);
    let outcome = scan_window_consistency(&trace, trace.resolved_tau);
    assert!(
        outcome.passed,
        "first violation {:?}",
        outcome.first_violation_k
    );
    assert_eq!(outcome.checked, 300);
}

#[test]
fn monotone_v_detects_increases() {
    let (_, trace) = sag_run(6, 300, 12);
    // A SAG run with α = 1/(16Lτ) on the pair problem contracts V once the
    // window is full whenever the measured staleness stayed within τ.
    if trace.good_event_held {
        let outcome = scan_monotone_v(&trace, trace.resolved_tau);
        assert!(
            outcome.passed,
            "first violation {:?}",
            outcome.first_violation_k
        );
    }
}

#[test]
fn outcome_merge_keeps_worst() {
    let mut a = CheckOutcome {
        passed: true,
        first_violation_k: None,
        margin_min: 0.5,
        checked: 10,
    };
    let b = CheckOutcome {
        passed: false,
        first_violation_k: Some(7),
        margin_min: -0.1,
        checked: 3,
    };
    a.merge(&b);
    assert!(!a.passed);
    assert_eq!(a.first_violation_k, Some(7));
    assert_eq!(a.margin_min, -0.1);
    assert_eq!(a.checked, 13);
}

#[test]
fn scans_locate_injected_violations_exactly() {
    // tau = 30 over 200 iterations of a 2-component stream: the good event
    // holds essentially surely, so the baseline scans are clean.
    let (p, mut trace) = sag_run(30, 200, 21);
    assert!(trace.good_event_held);
    let l = p.metadata().smoothness;
    let mu = p.metadata().strong_convexity;
    let alpha = trace.resolved_alpha;
    let tau = trace.resolved_tau;

    // Clean baseline.
    assert!(scan_gradient_error(&trace, l, alpha, tau).passed);
    assert!(scan_descent(&trace, alpha).passed);
    assert!(scan_contraction(&trace, mu, alpha, tau).passed);

    // Corrupt the estimator error at one post-window row.
    let k = 77;
    let original = trace.rows[k];
    trace.rows[k].err_norm_sq = 1e6;
    let outcome = scan_gradient_error(&trace, l, alpha, tau);
    assert!(!outcome.passed);
    assert_eq!(outcome.first_violation_k, Some(k));
    trace.rows[k] = original;

    // Corrupt the sub-optimality at one row: the descent step into it fails.
    trace.rows[k].r += 1.0;
    let outcome = scan_descent(&trace, alpha);
    assert!(!outcome.passed);
    assert_eq!(outcome.first_violation_k, Some(k - 1));
    trace.rows[k] = original;

    // Corrupt V at one row: contraction into it fails.
    trace.rows[k].v *= 2.0;
    let outcome = scan_contraction(&trace, mu, alpha, tau);
    assert!(!outcome.passed);
    assert_eq!(outcome.first_violation_k, Some(k - 1));
    trace.rows[k] = original;

    // Corrupt the estimator norm: the gradient bound fails at that row.
    trace.rows[k].est_norm_sq = 1e6;
    let outcome = scan_gradient_bound(&trace, l, alpha, tau);
    assert!(!outcome.passed);
    assert_eq!(outcome.first_violation_k, Some(k));
}

#[test]
fn envelope_scan_flags_final_iterate() {
    let (p, mut trace) = sag_run(30, 200, 21);
    let mut metadata = p.metadata().clone();
    metadata.condition_number = Some(1.0);
    let env = rate_envelope(EnvelopeKind::StronglyConvex, &metadata, 30, 200).unwrap();
    assert!(scan_envelope(&trace, &env).passed);
    trace.final_r = 1e9;
    let outcome = scan_envelope(&trace, &env);
    assert!(!outcome.passed);
    assert_eq!(outcome.first_violation_k, Some(200));
}
