use super::*;
use crate::error::Error;
use nalgebra::{DMatrix, DVector};
use rand::Rng;

fn builtin_suite() -> Vec<(&'static str, FiniteSumProblem)> {
    vec![
        ("quadratic", make_quadratic(20, 5, 10.0, 7).unwrap()),
        ("pair_1d", quadratic_pair_1d()),
        ("logistic", make_logistic(10, 3, 0.1, 1).unwrap()),
        ("nonconvex", make_nonconvex(10, 3, 5).unwrap()),
    ]
}

#[test]
fn full_gradient_pair_1d_hand_value() {
    // (1 + (1-2))/2 = 0 at x = 1.
    let p = quadratic_pair_1d();
    let g = p.full_gradient(&[1.0]).unwrap();
    assert_eq!(g, vec![0.0]);
}

#[test]
fn full_gradient_vanishes_at_minimizer() {
    for (name, p) in builtin_suite() {
        let g = p.full_gradient(&p.metadata().minimizer.clone()).unwrap();
        let tol = 1e-9 * (p.metadata().smoothness * p.metadata().radius_b).max(1.0);
        assert!(norm(&g) <= tol, "{name}: ‖∇f(x*)‖ = {}", norm(&g));
    }
}

#[test]
fn full_gradient_single_component_is_exact() {
    let p = make_quadratic(1, 4, 1.0, 3).unwrap();
    let x = vec![0.3, -1.2, 0.7, 2.0];
    assert_eq!(p.full_gradient(&x).unwrap(), p.component_gradient(0, &x));
}

#[test]
fn full_gradient_matches_component_average() {
    for (name, p) in builtin_suite() {
        let mut rng = crate::rng::seeded_rng(99);
        for _ in 0..20 {
            let x: Vec<f64> = (0..p.dimension())
                .map(|_| rng.random_range(-2.0..2.0))
                .collect();
            let full = p.full_gradient(&x).unwrap();
            let mut manual = vec![0.0; p.dimension()];
            for i in 0..p.n_components() {
                for (m, g) in manual.iter_mut().zip(p.component_gradient(i, &x)) {
                    *m += g;
                }
            }
            for m in manual.iter_mut() {
                *m /= p.n_components() as f64;
            }
            let diff = norm(&sub(&full, &manual));
            assert!(diff <= 1e-12 * norm(&full).max(1.0), "{name}: diff {diff}");
        }
    }
}

#[test]
fn full_gradient_names_faulty_component() {
    struct Faulty;
    impl ComponentOracle for Faulty {
        fn gradient(&self, i: usize, x: &[f64], out: &mut [f64]) {
            out[0] = if i == 1 && x[0] > 100.0 {
                f64::NAN
            } else {
                x[0]
            };
        }
        fn value(&self, _i: usize, x: &[f64]) -> f64 {
            0.5 * x[0] * x[0]
        }
    }
    let metadata = ProblemMetadata {
        smoothness: 1.0,
        strong_convexity: 1.0,
        minimizer: vec![0.0],
        optimal_value: 0.0,
        component_minimizers: vec![vec![0.0], vec![0.0]],
        radius_b: 0.0,
        condition_number: Some(1.0),
    };
    let p = FiniteSumProblem::new(2, 1, std::sync::Arc::new(Faulty), metadata).unwrap();
    match p.full_gradient(&[200.0]) {
        Err(Error::NumericalFault { index, .. }) => assert_eq!(index, 1),
        other => panic!("expected numerical fault, got {other:?}"),
    }
}

#[test]
fn quadratic_from_parts_origin_singleton() {
    let p = quadratic_from_parts(
        vec![DMatrix::from_element(1, 1, 1.0)],
        vec![DVector::from_element(1, 0.0)],
    )
    .unwrap();
    let m = p.metadata();
    assert_eq!(m.minimizer, vec![0.0]);
    assert_eq!(m.radius_b, 0.0);
    assert_eq!(m.optimal_value, 0.0);
}

#[test]
fn quadratic_pair_metadata() {
    let p = quadratic_pair_1d();
    let m = p.metadata();
    assert!((m.minimizer[0] - 1.0).abs() < 1e-12);
    assert!((m.component_minimizers[0][0] - 0.0).abs() < 1e-12);
    assert!((m.component_minimizers[1][0] - 2.0).abs() < 1e-12);
    assert!((m.radius_b - 2.0).abs() < 1e-12);
    assert!((m.smoothness - 1.0).abs() < 1e-12);
    assert!((m.strong_convexity - 1.0).abs() < 1e-12);
    assert!((m.optimal_value - 0.5).abs() < 1e-12);
}

#[test]
fn make_quadratic_condition_number_eigencheck() {
    let p = make_quadratic(20, 5, 10.0, 7).unwrap();
    // Independent route: rebuild the average Hessian column-by-column from
    // gradient probes, then eigendecompose it.
    let d = p.dimension();
    let g0 = p.full_gradient(&vec![0.0; d]).unwrap();
    let mut hess = DMatrix::<f64>::zeros(d, d);
    for j in 0..d {
        let mut e = vec![0.0; d];
        e[j] = 1.0;
        let gj = p.full_gradient(&e).unwrap();
        for r in 0..d {
            hess[(r, j)] = gj[r] - g0[r];
        }
    }
    let eigs = hess.symmetric_eigen().eigenvalues;
    let kappa = eigs.max() / eigs.min();
    assert!((9.9..=10.1).contains(&kappa), "kappa = {kappa}");
    assert!((p.metadata().condition_number.unwrap() - 10.0).abs() < 1e-9);
}

#[test]
fn make_quadratic_rejects_kappa_below_one() {
    match make_quadratic(5, 3, 0.5, 1) {
        Err(Error::InvalidArgument(_)) => {}
        other => panic!("expected invalid argument, got {other:?}"),
    }
}

#[test]
fn make_quadratic_is_deterministic() {
    let a = make_quadratic(6, 4, 3.0, 11).unwrap();
    let b = make_quadratic(6, 4, 3.0, 11).unwrap();
    let x = vec![0.5, -0.25, 1.0, 2.0];
    for i in 0..6 {
        assert_eq!(a.component_gradient(i, &x), b.component_gradient(i, &x));
    }
    assert_eq!(a.metadata().minimizer, b.metadata().minimizer);
}

#[test]
fn logistic_zero_feature_component() {
    let p = logistic_from_data(vec![vec![0.0, 0.0]], vec![1.0], 0.5).unwrap();
    let x = vec![0.7, -0.3];
    let expected = 2.0_f64.ln() + 0.25 * (0.49 + 0.09);
    assert!((p.component_value(0, &x) - expected).abs() < 1e-12);
    assert!(norm(&p.metadata().component_minimizers[0]) < 1e-12);
}

#[test]
fn logistic_reference_solve_accuracy() {
    let p = make_logistic(10, 3, 0.1, 1).unwrap();
    let g = p.full_gradient(&p.metadata().minimizer.clone()).unwrap();
    assert!(norm(&g) <= 1e-10, "‖∇f(x*)‖ = {}", norm(&g));
    for i in 0..p.n_components() {
        let gi = p.component_gradient(i, &p.metadata().component_minimizers[i].clone());
        assert!(norm(&gi) <= 1e-12, "component {i}: {}", norm(&gi));
    }
}

#[test]
fn logistic_rejects_nonpositive_l2() {
    match make_logistic(5, 2, 0.0, 1) {
        Err(Error::InvalidArgument(_)) => {}
        other => panic!("expected invalid argument, got {other:?}"),
    }
}

#[test]
fn nonconvex_symmetric_well_at_origin() {
    let p = nonconvex_from_centers(vec![vec![0.0, 0.0]]).unwrap();
    assert_eq!(p.value(&[0.0, 0.0]), 0.0);
    assert_eq!(p.full_gradient(&[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
    assert_eq!(p.metadata().strong_convexity, 0.0);
    assert!(p.metadata().condition_number.is_none());
}

#[test]
fn well_derivative_hand_values() {
    // φ'(1) = 2·1/(1+1)² = 0.5
    assert!((well_first_derivative(1.0) - 0.5).abs() < 1e-15);
    assert_eq!(well_first_derivative(0.0), 0.0);
}

#[test]
fn well_curvature_bounded_by_two() {
    let mut t = -10.0;
    while t <= 10.0 {
        assert!(well_second_derivative(t).abs() <= 2.0, "t = {t}");
        t += 0.01;
    }
    assert_eq!(well_second_derivative(0.0), 2.0);
}

#[test]
fn gradcheck_quadratic_tight() {
    let p = make_quadratic(20, 5, 10.0, 7).unwrap();
    let report = check_gradients(&p, 50, 123);
    assert!(report.passed);
    assert!(
        report.max_rel_error <= 1e-7,
        "err = {}",
        report.max_rel_error
    );
}

#[test]
fn gradcheck_zero_function_exact() {
    let p = quadratic_from_parts(
        vec![DMatrix::from_element(2, 2, 0.0)],
        vec![DVector::from_element(2, 0.0)],
    )
    .unwrap();
    let report = check_gradients(&p, 10, 5);
    assert_eq!(report.max_rel_error, 0.0);
}

#[test]
fn gradcheck_all_builtins() {
    for (name, p) in builtin_suite() {
        let report = check_gradients(&p, 50, 321);
        assert!(
            report.passed,
            "{name}: max rel err {}",
            report.max_rel_error
        );
    }
}

#[test]
fn components_are_l_smooth() {
    for (name, p) in builtin_suite() {
        let ratio = empirical_smoothness(&p, 100, 42);
        let bound = (1.0 + 1e-8) * p.metadata().smoothness;
        assert!(ratio <= bound, "{name}: ratio {ratio} > {bound}");
    }
}

#[test]
fn gradient_domination_on_strongly_convex() {
    for (name, p) in builtin_suite() {
        let mu = p.metadata().strong_convexity;
        if mu == 0.0 {
            continue;
        }
        let mut rng = crate::rng::seeded_rng(17);
        for _ in 0..100 {
            let y: Vec<f64> = (0..p.dimension())
                .map(|_| rng.random_range(-2.0..2.0))
                .collect();
            let g = p.full_gradient(&y).unwrap();
            let lhs = norm_sq(&g);
            let rhs = 2.0 * mu * p.suboptimality(&y);
            assert!(lhs >= rhs - 1e-9, "{name}: {lhs} < {rhs}");
        }
    }
}

#[test]
fn radius_rederivable_from_minimizers() {
    for (name, p) in builtin_suite() {
        let derived = p.metadata().derived_radius();
        assert!(
            (derived - p.metadata().radius_b).abs() <= 1e-12 * derived.max(1.0),
            "{name}"
        );
    }
}
