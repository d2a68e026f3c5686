//! ℓ2-regularized logistic regression on synthetic data.
//!
//! `f_i(x) = log(1 + exp(−y_i·a_iᵀx)) + (l2/2)‖x‖²` with `y_i ∈ {−1, +1}`.
//! Per-component smoothness is `‖a_i‖²/4 + l2`; the average is `l2`-strongly
//! convex. Minimizers (composite and per component) come from a damped Newton
//! reference solve driven to gradient norm ≤ 1e−12, run once at construction.

use super::{ComponentOracle, FiniteSumProblem, ProblemMetadata};
use crate::error::Error;
use crate::rng::seeded_rng;
use crate::vecmath::{dot, norm, norm_sq};
use crate::Result;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use std::sync::Arc;

/// Numerically stable `log(1 + exp(z))`.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Numerically stable logistic sigmoid.
fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

struct LogisticOracle {
    features: Vec<Vec<f64>>,
    labels: Vec<f64>,
    l2: f64,
}

impl LogisticOracle {
    /// Margin `t_i = y_i·a_iᵀx`.
    fn margin(&self, i: usize, x: &[f64]) -> f64 {
        self.labels[i] * dot(&self.features[i], x)
    }
}

impl ComponentOracle for LogisticOracle {
    fn gradient(&self, i: usize, x: &[f64], out: &mut [f64]) {
        let t = self.margin(i, x);
        let coeff = -self.labels[i] * sigmoid(-t);
        for (j, o) in out.iter_mut().enumerate() {
            *o = coeff * self.features[i][j] + self.l2 * x[j];
        }
    }

    fn value(&self, i: usize, x: &[f64]) -> f64 {
        softplus(-self.margin(i, x)) + 0.5 * self.l2 * norm_sq(x)
    }
}

/// Damped Newton on a sum of logistic losses plus the ridge term, over the
/// given subset of observations. Returns the minimizer with
/// `‖gradient‖ ≤ tol`.
fn newton_solve(
    features: &[Vec<f64>],
    labels: &[f64],
    subset: &[usize],
    l2: f64,
    tol: f64,
) -> Result<DVector<f64>> {
    let d = features[0].len();
    let m = subset.len() as f64;
    let mut x = DVector::<f64>::zeros(d);
    let grad = |x: &DVector<f64>| -> DVector<f64> {
        let mut g = x * l2;
        for &i in subset {
            let t = labels[i] * dot(&features[i], x.as_slice());
            let coeff = -labels[i] * sigmoid(-t) / m;
            for j in 0..d {
                g[j] += coeff * features[i][j];
            }
        }
        g
    };
    let objective = |x: &DVector<f64>| -> f64 {
        let mut v = 0.5 * l2 * x.norm_squared();
        for &i in subset {
            v += softplus(-labels[i] * dot(&features[i], x.as_slice())) / m;
        }
        v
    };
    for _ in 0..200 {
        let g = grad(&x);
        if g.norm() <= tol {
            return Ok(x);
        }
        let mut hess = DMatrix::<f64>::identity(d, d) * l2;
        for &i in subset {
            let t = labels[i] * dot(&features[i], x.as_slice());
            let s = sigmoid(-t);
            let w = s * (1.0 - s) / m;
            for r in 0..d {
                for c in 0..d {
                    hess[(r, c)] += w * features[i][r] * features[i][c];
                }
            }
        }
        let step = hess.cholesky().map(|ch| ch.solve(&g)).ok_or_else(|| {
            Error::InvalidArgument("logistic Hessian not positive definite".into())
        })?;
        // Backtrack until the objective decreases; the ridge term guarantees
        // this terminates.
        let f0 = objective(&x);
        let mut scale = 1.0;
        loop {
            let candidate = &x - &step * scale;
            if objective(&candidate) <= f0 || scale < 1e-12 {
                x = candidate;
                break;
            }
            scale *= 0.5;
        }
    }
    let g = grad(&x);
    if g.norm() <= tol {
        Ok(x)
    } else {
        Err(Error::InvalidArgument(format!(
            "newton reference solve stalled at gradient norm {}",
            g.norm()
        )))
    }
}

/// Build a logistic problem from explicit observations.
pub fn logistic_from_data(
    features: Vec<Vec<f64>>,
    labels: Vec<f64>,
    l2: f64,
) -> Result<FiniteSumProblem> {
    if l2 <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "l2 = {l2} must be positive (component minimizers may be unbounded otherwise)"
        )));
    }
    if features.is_empty() || features.len() != labels.len() {
        return Err(Error::InvalidArgument(
            "need matching, nonempty feature and label lists".into(),
        ));
    }
    let n = features.len();
    let d = features[0].len();
    if features.iter().any(|a| a.len() != d) {
        return Err(Error::InvalidArgument("ragged feature matrix".into()));
    }
    if labels.iter().any(|y| *y != 1.0 && *y != -1.0) {
        return Err(Error::InvalidArgument("labels must be +1 or -1".into()));
    }

    let smoothness = features
        .iter()
        .map(|a| norm_sq(a) / 4.0 + l2)
        .fold(f64::NEG_INFINITY, f64::max);

    let all: Vec<usize> = (0..n).collect();
    let minimizer = newton_solve(&features, &labels, &all, l2, 1e-13)?;
    let component_minimizers: Vec<Vec<f64>> = (0..n)
        .map(|i| newton_solve(&features, &labels, &[i], l2, 1e-13).map(|v| v.as_slice().to_vec()))
        .collect::<Result<_>>()?;

    let oracle = Arc::new(LogisticOracle {
        features,
        labels,
        l2,
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
        strong_convexity: l2,
        minimizer: minimizer.as_slice().to_vec(),
        optimal_value: value / n as f64,
        component_minimizers,
        radius_b,
        condition_number: Some(smoothness / l2),
    };
    FiniteSumProblem::new(n, d, oracle, metadata)
}

/// Synthetic logistic testbed: Gaussian features, labels from a planted
/// separator.
pub fn make_logistic(n: usize, d: usize, l2: f64, seed: u64) -> Result<FiniteSumProblem> {
    if n < 1 || d < 1 {
        return Err(Error::InvalidArgument("need n >= 1 and d >= 1".into()));
    }
    if l2 <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "l2 = {l2} must be positive"
        )));
    }
    let mut rng = seeded_rng(seed);
    let planted: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
    let mut features = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let a: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
        let score = dot(&a, &planted);
        // 10% label noise keeps the unregularized minimizer finite-ish and
        // the problem away from separability.
        let flip = rng.random_range(0.0..1.0) < 0.1;
        let y = if (score >= 0.0) != flip { 1.0 } else { -1.0 };
        features.push(a);
        labels.push(y);
    }
    logistic_from_data(features, labels, l2)
}
