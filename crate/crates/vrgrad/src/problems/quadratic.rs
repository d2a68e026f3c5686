//! Random SPD quadratic sums with exactly controlled spectra.

use super::{ComponentOracle, FiniteSumProblem, ProblemMetadata};
use crate::error::Error;
use crate::rng::seeded_rng;
use crate::vecmath::norm;
use crate::Result;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use std::sync::Arc;

struct QuadraticOracle {
    mats: Vec<DMatrix<f64>>,
    rhs: Vec<DVector<f64>>,
    constants: Vec<f64>,
}

impl ComponentOracle for QuadraticOracle {
    fn gradient(&self, i: usize, x: &[f64], out: &mut [f64]) {
        let a = &self.mats[i];
        let b = &self.rhs[i];
        let d = x.len();
        for r in 0..d {
            let mut acc = -b[r];
            for c in 0..d {
                acc += a[(r, c)] * x[c];
            }
            out[r] = acc;
        }
    }

    fn value(&self, i: usize, x: &[f64]) -> f64 {
        let a = &self.mats[i];
        let b = &self.rhs[i];
        let d = x.len();
        let mut quad = 0.0;
        let mut lin = 0.0;
        for r in 0..d {
            let mut row = 0.0;
            for c in 0..d {
                row += a[(r, c)] * x[c];
            }
            quad += x[r] * row;
            lin += b[r] * x[r];
        }
        0.5 * quad - lin + self.constants[i]
    }
}

fn solve_component_minimizer(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    index: usize,
) -> Result<DVector<f64>> {
    if a.iter().all(|v| *v == 0.0) {
        if b.iter().all(|v| *v == 0.0) {
            return Ok(DVector::zeros(a.nrows()));
        }
        return Err(Error::InvalidArgument(format!(
            "component {index}: zero matrix with nonzero linear term has no minimizer"
        )));
    }
    let solved = a
        .clone()
        .cholesky()
        .map(|ch| ch.solve(b))
        .or_else(|| a.clone().lu().solve(b))
        .ok_or_else(|| {
            Error::InvalidArgument(format!(
                "component {index}: singular quadratic has no minimizer"
            ))
        })?;
    let residual = a * &solved - b;
    if residual.norm() > 1e-8 * b.norm().max(1.0) {
        return Err(Error::InvalidArgument(format!(
            "component {index}: linear solve residual {} too large",
            residual.norm()
        )));
    }
    Ok(solved)
}

/// Build a quadratic finite sum `f_i(x) = ½ xᵀA_i x − b_iᵀx` from explicit
/// parts, deriving all metadata by eigendecomposition and linear solves.
pub fn quadratic_from_parts(
    mats: Vec<DMatrix<f64>>,
    rhs: Vec<DVector<f64>>,
) -> Result<FiniteSumProblem> {
    let constants = vec![0.0; mats.len()];
    quadratic_from_parts_with_constants(mats, rhs, constants)
}

/// [`quadratic_from_parts`] with per-component additive constants, for hand
/// problems written in completed-square form like `½(x−2)²`.
pub fn quadratic_from_parts_with_constants(
    mats: Vec<DMatrix<f64>>,
    rhs: Vec<DVector<f64>>,
    constants: Vec<f64>,
) -> Result<FiniteSumProblem> {
    if mats.is_empty() || mats.len() != rhs.len() || mats.len() != constants.len() {
        return Err(Error::InvalidArgument(
            "need matching, nonempty matrix/rhs/constant lists".into(),
        ));
    }
    let d = mats[0].nrows();
    for (i, (a, b)) in mats.iter().zip(&rhs).enumerate() {
        if a.nrows() != d || a.ncols() != d || b.len() != d {
            return Err(Error::InvalidArgument(format!(
                "component {i}: inconsistent dimensions"
            )));
        }
        if (a - a.transpose()).amax() > 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "component {i}: matrix not symmetric"
            )));
        }
    }
    let n = mats.len();

    let mut smoothness: f64 = 0.0;
    for a in &mats {
        let eigs = a.clone().symmetric_eigen().eigenvalues;
        smoothness = smoothness.max(eigs.amax());
    }
    // A sum of zero functions is 0-smooth; any positive constant is a valid
    // (loose) smoothness bound and keeps kappa well defined downstream.
    if smoothness == 0.0 {
        smoothness = 1.0;
    }

    let mut avg = DMatrix::zeros(d, d);
    let mut avg_rhs = DVector::zeros(d);
    for (a, b) in mats.iter().zip(&rhs) {
        avg += a;
        avg_rhs += b;
    }
    avg /= n as f64;
    avg_rhs /= n as f64;

    let avg_eigs = avg.clone().symmetric_eigen().eigenvalues;
    let min_eig = avg_eigs.min();
    let strong_convexity = if min_eig > 1e-12 { min_eig } else { 0.0 };

    let minimizer = solve_component_minimizer(&avg, &avg_rhs, usize::MAX)
        .map_err(|_| Error::InvalidArgument("average Hessian is singular".into()))?;
    let component_minimizers: Vec<Vec<f64>> = mats
        .iter()
        .zip(&rhs)
        .enumerate()
        .map(|(i, (a, b))| solve_component_minimizer(a, b, i).map(|v| v.as_slice().to_vec()))
        .collect::<Result<_>>()?;

    let oracle = Arc::new(QuadraticOracle {
        mats,
        rhs,
        constants,
    });
    let radius_b = component_minimizers
        .iter()
        .map(|m| norm(m))
        .fold(minimizer.norm(), f64::max);
    let mut value = 0.0;
    for i in 0..n {
        value += oracle.value(i, minimizer.as_slice());
    }
    let metadata = ProblemMetadata {
        smoothness,
        strong_convexity,
        minimizer: minimizer.as_slice().to_vec(),
        optimal_value: value / n as f64,
        component_minimizers,
        radius_b,
        condition_number: (strong_convexity > 0.0).then(|| smoothness / strong_convexity),
    };
    FiniteSumProblem::new(n, d, oracle, metadata)
}

/// The two-component 1-d quadratic `f_1 = ½x²`, `f_2 = ½(x−2)²`.
///
/// `x* = 1`, `x_1* = 0`, `x_2* = 2`, `B = 2`, `L = μ = 1`.
pub fn quadratic_pair_1d() -> FiniteSumProblem {
    quadratic_from_parts_with_constants(
        vec![
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::from_element(1, 1, 1.0),
        ],
        vec![DVector::from_element(1, 0.0), DVector::from_element(1, 2.0)],
        vec![0.0, 2.0],
    )
    .expect("hand-built problem is valid")
}

/// Random quadratic testbed with per-component smoothness exactly `L = 1` and
/// average-Hessian condition number exactly `kappa_target`.
///
/// All components share one random eigenbasis `Q`; component `i` has spectrum
/// `{L, μ, uniform(μ, L), …}` so the average Hessian has spectrum equal to the
/// entrywise mean, pinned to `[μ, L]` with both endpoints attained. For
/// `d = 1` the spread is over components instead, which requires
/// `n > kappa_target`.
pub fn make_quadratic(
    n: usize,
    d: usize,
    kappa_target: f64,
    seed: u64,
) -> Result<FiniteSumProblem> {
    if n < 1 || d < 1 {
        return Err(Error::InvalidArgument("need n >= 1 and d >= 1".into()));
    }
    if kappa_target.is_nan() || kappa_target < 1.0 {
        return Err(Error::InvalidArgument(format!(
            "kappa_target {kappa_target} must be >= 1"
        )));
    }
    let smoothness = 1.0;
    let mu = smoothness / kappa_target;
    let mut rng = seeded_rng(seed);

    let spectra: Vec<Vec<f64>> = if d == 1 {
        if kappa_target == 1.0 {
            vec![vec![smoothness]; n]
        } else {
            if n == 1 {
                return Err(Error::InvalidArgument(
                    "1-d single-component quadratic forces kappa = 1".into(),
                ));
            }
            // mean of {L, a, …, a} must equal L/kappa.
            let a = smoothness * (n as f64 - kappa_target) / (kappa_target * (n as f64 - 1.0));
            if a <= 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "kappa_target {kappa_target} unreachable with n = {n} in 1-d (need n > kappa)"
                )));
            }
            let mut out = vec![vec![a]; n];
            out[0][0] = smoothness;
            out
        }
    } else {
        (0..n)
            .map(|_| {
                let mut eigs = vec![smoothness, mu];
                for _ in 2..d {
                    let lam = if smoothness > mu {
                        rng.random_range(mu..smoothness)
                    } else {
                        mu
                    };
                    eigs.push(lam);
                }
                eigs
            })
            .collect()
    };

    let basis = if d == 1 {
        DMatrix::identity(1, 1)
    } else {
        let gauss = DMatrix::from_fn(d, d, |_, _| StandardNormal.sample(&mut rng));
        gauss.qr().q()
    };

    let mut mats = Vec::with_capacity(n);
    let mut rhs = Vec::with_capacity(n);
    for eigs in &spectra {
        let diag = DMatrix::from_diagonal(&DVector::from_row_slice(eigs));
        let a: DMatrix<f64> = &basis * diag * basis.transpose();
        let a = (&a + a.transpose()) * 0.5;
        mats.push(a);
        rhs.push(DVector::from_fn(d, |_, _| StandardNormal.sample(&mut rng)));
    }

    // Minimizers through the shared eigenbasis: x = Q diag(1/λ) Qᵀ b.
    let spectral_solve = |eigs: &[f64], b: &DVector<f64>| -> DVector<f64> {
        let mut y = basis.transpose() * b;
        for (yi, lam) in y.iter_mut().zip(eigs) {
            *yi /= lam;
        }
        &basis * y
    };
    let component_minimizers: Vec<Vec<f64>> = spectra
        .iter()
        .zip(&rhs)
        .map(|(eigs, b)| spectral_solve(eigs, b).as_slice().to_vec())
        .collect();
    let mean_spectrum: Vec<f64> = (0..d)
        .map(|j| spectra.iter().map(|e| e[j]).sum::<f64>() / n as f64)
        .collect();
    let mean_rhs = rhs.iter().fold(DVector::zeros(d), |acc, b| acc + b) / n as f64;
    let minimizer = spectral_solve(&mean_spectrum, &mean_rhs);

    let oracle = Arc::new(QuadraticOracle {
        mats,
        rhs,
        constants: vec![0.0; n],
    });
    let mut value = 0.0;
    for i in 0..n {
        value += oracle.value(i, minimizer.as_slice());
    }
    let radius_b = component_minimizers
        .iter()
        .map(|m| norm(m))
        .fold(minimizer.norm(), f64::max);
    let metadata = ProblemMetadata {
        smoothness,
        strong_convexity: mu,
        minimizer: minimizer.as_slice().to_vec(),
        optimal_value: value / n as f64,
        component_minimizers,
        radius_b,
        condition_number: Some(smoothness / mu),
    };
    FiniteSumProblem::new(n, d, oracle, metadata)
}
