use super::*;
use crate::diagnostics::{scan_descent, scan_gd_rate};
use crate::problems::{make_nonconvex, make_quadratic, quadratic_pair_1d};
use crate::samplers::{Sampler, SamplerSpec};
use crate::vecmath::{norm, sub};

fn iid_sampler(n: usize, base: u64, rep: u64) -> Sampler {
    Sampler::new(&SamplerSpec::IidUniform, n, base, rep).unwrap()
}

#[test]
fn gd_rate_holds_pointwise() {
    let p = make_quadratic(20, 5, 10.0, 7).unwrap();
    let mut sampler = iid_sampler(20, 1, 0);
    let config = RunConfig::theory(Algorithm::Gd, 200, 0.05);
    let trace = run(&p, &mut sampler, &config).unwrap();
    assert_eq!(trace.rows.len(), 200);
    assert!((trace.resolved_alpha - 1.0).abs() < 1e-12); // 1/L with L = 1
    let outcome = scan_gd_rate(&trace, p.metadata().condition_number.unwrap());
    assert!(
        outcome.passed,
        "first violation at {:?}",
        outcome.first_violation_k
    );
    // Monotone sub-optimality for GD on a convex quadratic.
    for pair in trace.rows.windows(2) {
        assert!(pair[1].r <= pair[0].r + 1e-12);
    }
}

#[test]
fn zero_iterations_returns_initial_gap() {
    let p = quadratic_pair_1d();
    let mut sampler = iid_sampler(2, 3, 0);
    let config = RunConfig::manual(Algorithm::Sag, 0.1, 4, 0);
    let trace = run(&p, &mut sampler, &config).unwrap();
    assert!(trace.rows.is_empty());
    assert_eq!(trace.final_x, vec![0.0]);
    // r_0 = f(0) − f(x*) = 1 − 1/2.
    assert!((trace.final_r - 0.5).abs() < 1e-12);
}

#[test]
fn single_component_algorithms_coincide_bitwise() {
    let p = make_quadratic(1, 3, 1.0, 13).unwrap();
    let config = |alg| RunConfig::manual(alg, 0.2, 1, 60);
    let mut traces = Vec::new();
    for alg in [
        Algorithm::Gd,
        Algorithm::Sgd,
        Algorithm::Sag,
        Algorithm::Saga,
        Algorithm::Iag,
    ] {
        let mut sampler = iid_sampler(1, 9, 0);
        traces.push(run(&p, &mut sampler, &config(alg)).unwrap());
    }
    let reference = &traces[0];
    for trace in &traces[1..] {
        assert_eq!(trace.final_x, reference.final_x, "{:?}", trace.algorithm);
        for (a, b) in trace.rows.iter().zip(&reference.rows) {
            assert_eq!(
                a.r.to_bits(),
                b.r.to_bits(),
                "{:?} k={}",
                trace.algorithm,
                a.k
            );
        }
    }
}

#[test]
fn descent_inequality_for_sag_and_saga() {
    let p = make_quadratic(20, 5, 10.0, 7).unwrap();
    let alpha = 1.0 / (4.0 * p.metadata().smoothness);
    for alg in [Algorithm::Sag, Algorithm::Saga] {
        let mut sampler = iid_sampler(20, 21, 0);
        let config = RunConfig::manual(alg, alpha, 80, 2000);
        let trace = run(&p, &mut sampler, &config).unwrap();
        let outcome = scan_descent(&trace, alpha);
        assert!(
            outcome.passed,
            "{alg:?}: first violation at {:?}",
            outcome.first_violation_k
        );
        assert_eq!(outcome.checked, 2000);
    }
}

#[test]
fn cyclic_staleness_is_periodic_and_good() {
    let n = 10;
    let p = make_quadratic(n, 4, 5.0, 2).unwrap();
    let mut sampler = Sampler::new(&SamplerSpec::Cyclic, n, 0, 0).unwrap();
    let config = RunConfig::theory(Algorithm::Iag, 100, 0.05);
    let trace = run(&p, &mut sampler, &config).unwrap();
    assert_eq!(trace.resolved_tau, n); // certified delay for cyclic order
    assert!(trace.good_event_held);
    for row in &trace.rows {
        if row.k >= n {
            assert_eq!(row.max_staleness, n, "k = {}", row.k);
        } else {
            assert_eq!(row.max_staleness, row.k);
        }
    }
}

#[test]
fn saga_stays_unbiased_along_trajectory() {
    let p = make_quadratic(12, 4, 8.0, 4).unwrap();
    let mut sampler = iid_sampler(12, 31, 0);
    let alpha = 1.0 / (16.0 * p.metadata().smoothness);
    let mut memory = GradientMemory::new(12, 4);
    let mut x = vec![0.0; 4];
    for k in 0..200 {
        if k % 10 == 0 {
            let mean = saga_unbiasedness_oracle(&p, &memory, &x).unwrap();
            let full = p.full_gradient(&x).unwrap();
            let rel = norm(&sub(&mean, &full)) / norm(&full).max(1e-300);
            assert!(rel <= 1e-10, "k = {k}: rel = {rel}");
        }
        let i_k = sampler.next_index();
        let g = estimate_gradient(Algorithm::Saga, &p, &mut memory, &x, i_k, k).unwrap();
        for (xi, gi) in x.iter_mut().zip(&g) {
            *xi -= alpha * gi;
        }
    }
}

#[test]
fn divergence_reports_offending_iteration() {
    let p = make_quadratic(5, 3, 2.0, 6).unwrap();
    let mut sampler = iid_sampler(5, 2, 0);
    // A step size of 3/L on a quadratic doubles the error every iteration.
    let config = RunConfig::manual(Algorithm::Gd, 3.0, 4, 1000);
    match run(&p, &mut sampler, &config) {
        Err(Error::Divergence { iteration, .. }) => assert!(iteration > 0),
        other => panic!("expected divergence, got {other:?}"),
    }
}

#[test]
fn theory_parameter_resolution() {
    let p = make_quadratic(10, 3, 4.0, 1).unwrap();
    let mut sampler = iid_sampler(10, 5, 0);
    let config = RunConfig::theory(Algorithm::Sag, 500, 0.1);
    let tau = resolve_tau(&config, &sampler).unwrap();
    assert_eq!(
        tau,
        crate::concentration::staleness_bound_iid(10, 500, 0.1).unwrap()
    );
    let alpha = resolve_alpha(&config, &p, tau).unwrap();
    assert!((alpha - 1.0 / (16.0 * tau as f64)).abs() < 1e-15);

    let sgd = RunConfig::theory(Algorithm::Sgd, 500, 0.1);
    let alpha = resolve_alpha(&sgd, &p, tau).unwrap();
    let m = p.metadata();
    assert!((alpha - m.strong_convexity / (2.0 * m.smoothness * m.smoothness)).abs() < 1e-15);

    let trace = run(&p, &mut sampler, &RunConfig::theory(Algorithm::Gd, 10, 0.1)).unwrap();
    assert!((trace.resolved_alpha - 1.0 / m.smoothness).abs() < 1e-15);
}

#[test]
fn sgd_theory_step_needs_strong_convexity() {
    let p = make_nonconvex(4, 2, 3).unwrap();
    let mut sampler = iid_sampler(4, 8, 0);
    let config = RunConfig::theory(Algorithm::Sgd, 50, 0.1);
    match run(&p, &mut sampler, &config) {
        Err(Error::InvalidCombination(_)) => {}
        other => panic!("expected invalid combination, got {other:?}"),
    }
}

#[test]
fn markov_theory_tau_uses_mixing_data() {
    let p = quadratic_pair_1d();
    let spec = SamplerSpec::Markov {
        transition: vec![vec![0.9, 0.1], vec![0.1, 0.9]],
        start_state: None,
    };
    let sampler = Sampler::new(&spec, 2, 1, 0).unwrap();
    let mixing = sampler.mixing().unwrap();
    let config = RunConfig::theory(Algorithm::Saga, 500, 0.1);
    let tau = resolve_tau(&config, &sampler).unwrap();
    assert_eq!(
        tau,
        crate::concentration::staleness_bound_markov(
            mixing.t_mix,
            mixing.pi_min,
            2,
            500,
            0.1
        )
        .unwrap()
    );
    // The lazy two-state chain has t_mix = 4 and pi_min = 1/2.
    assert_eq!(tau, 6485);
    let alpha = resolve_alpha(&config, &p, tau).unwrap();
    assert!((alpha - 1.0 / (16.0 * tau as f64)).abs() < 1e-18);
}

#[test]
fn frozen_burn_in_holds_iterates_and_fills_memory() {
    let p = quadratic_pair_1d();
    let mut sampler = iid_sampler(2, 77, 0);
    let mut config = RunConfig::manual(Algorithm::Sag, 1.0 / 16.0, 8, 40);
    config.burn_in_freeze = true;
    let trace = run(&p, &mut sampler, &config).unwrap();
    for k in 0..=8 {
        assert_eq!(trace.x_norms[k], 0.0, "k = {k}");
    }
    for row in trace.rows.iter().take(8) {
        assert_eq!(row.est_norm_sq, 0.0);
    }
    // After the freeze the run proceeds normally and moves.
    assert!(trace.x_norms.last().unwrap() > &0.0);
    assert!(trace.rows[8..].iter().any(|row| row.est_norm_sq > 0.0));
}

#[test]
fn untraced_run_matches_traced_run() {
    let p = make_quadratic(8, 3, 5.0, 10).unwrap();
    let config_on = RunConfig::manual(Algorithm::Saga, 0.02, 16, 300);
    let mut config_off = config_on.clone();
    config_off.record_trace = false;

    let mut s1 = iid_sampler(8, 4, 2);
    let traced = run(&p, &mut s1, &config_on).unwrap();
    let mut s2 = iid_sampler(8, 4, 2);
    let untraced = run(&p, &mut s2, &config_off).unwrap();

    assert!(untraced.rows.is_empty());
    assert_eq!(traced.final_x, untraced.final_x);
    assert_eq!(traced.final_r.to_bits(), untraced.final_r.to_bits());
    assert_eq!(traced.good_event_held, untraced.good_event_held);
}

#[test]
fn identical_seeds_reproduce_traces_bitwise() {
    let p = make_quadratic(6, 3, 3.0, 5).unwrap();
    let config = RunConfig::manual(Algorithm::Sag, 0.01, 12, 400);
    let mut s1 = iid_sampler(6, 123, 7);
    let mut s2 = iid_sampler(6, 123, 7);
    let a = run(&p, &mut s1, &config).unwrap();
    let b = run(&p, &mut s2, &config).unwrap();
    assert_eq!(a.to_csv_string(), b.to_csv_string());
}

#[test]
fn csv_shape_and_header() {
    let p = quadratic_pair_1d();
    let mut sampler = iid_sampler(2, 6, 0);
    let config = RunConfig::manual(Algorithm::Saga, 0.05, 4, 25);
    let trace = run(&p, &mut sampler, &config).unwrap();
    let csv = trace.to_csv_string();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), TRACE_CSV_HEADER);
    assert_eq!(lines.count(), 25);
    assert!(trace.r_at(25).is_some());
    assert!(trace.r_at(26).is_none());
    // GD rows carry no sampled index.
    let mut sampler = iid_sampler(2, 6, 0);
    let trace = run(&p, &mut sampler, &RunConfig::theory(Algorithm::Gd, 3, 0.1)).unwrap();
    assert!(trace.rows.iter().all(|row| row.sampled_index == -1));
}

#[test]
fn suboptimality_nonnegative_on_convex_runs() {
    let p = make_quadratic(8, 3, 5.0, 10).unwrap();
    for alg in [Algorithm::Gd, Algorithm::Sag, Algorithm::Saga] {
        let mut sampler = iid_sampler(8, 19, 0);
        let config = RunConfig::manual(alg, 0.05, 16, 1500);
        let trace = run(&p, &mut sampler, &config).unwrap();
        for row in &trace.rows {
            assert!(row.r >= -1e-9, "{alg:?} k={}: r={}", row.k, row.r);
        }
        assert!(trace.final_r >= -1e-9);
    }
}

#[test]
fn memory_consistency_after_long_run() {
    let p = make_quadratic(10, 4, 6.0, 3).unwrap();
    let mut sampler = iid_sampler(10, 42, 0);
    let mut memory = GradientMemory::new(10, 4);
    let mut x = vec![0.1; 4];
    for k in 0..20_000 {
        let i_k = sampler.next_index();
        let g = estimate_gradient(Algorithm::Sag, &p, &mut memory, &x, i_k, k).unwrap();
        for (xi, gi) in x.iter_mut().zip(&g) {
            *xi -= 0.01 * gi;
        }
    }
    let exact = memory.recompute_sum();
    let drift = norm(&sub(&exact, memory.running_sum()));
    assert!(drift <= 1e-10 * norm(&exact).max(1.0), "drift = {drift}");
}
