//! Separable smooth non-convex sums built from the bounded well
//! `φ(t) = t²/(1+t²)`.
//!
//! `f_i(x) = Σ_j φ(x_j − c_{i,j})`, so each component has the global
//! minimizer `x_i* = c_i` with `f_i(c_i) = 0`, and `|φ''| ≤ 2` gives the
//! shared smoothness constant `L = 2`. The average stays coordinate-separable,
//! which lets the reference minimizer be found per coordinate by a dense
//! multi-start scan plus golden-section polish.

use super::{ComponentOracle, FiniteSumProblem, ProblemMetadata};
use crate::error::Error;
use crate::rng::seeded_rng;
use crate::vecmath::norm;
use crate::Result;
use rand::Rng;
use std::sync::Arc;

fn well(t: f64) -> f64 {
    let t2 = t * t;
    t2 / (1.0 + t2)
}

/// `φ'(t) = 2t/(1+t²)²`.
pub fn well_first_derivative(t: f64) -> f64 {
    let q = 1.0 + t * t;
    2.0 * t / (q * q)
}

/// `φ''(t) = (2 − 6t²)/(1+t²)³`, bounded by 2 in absolute value.
pub fn well_second_derivative(t: f64) -> f64 {
    let q = 1.0 + t * t;
    (2.0 - 6.0 * t * t) / (q * q * q)
}

struct WellOracle {
    centers: Vec<Vec<f64>>,
}

impl ComponentOracle for WellOracle {
    fn gradient(&self, i: usize, x: &[f64], out: &mut [f64]) {
        for (j, o) in out.iter_mut().enumerate() {
            *o = well_first_derivative(x[j] - self.centers[i][j]);
        }
    }

    fn value(&self, i: usize, x: &[f64]) -> f64 {
        x.iter()
            .zip(&self.centers[i])
            .map(|(xj, cj)| well(xj - cj))
            .sum()
    }
}

/// Golden-section minimization of a unimodal-enough 1-d slice over `[lo, hi]`.
fn golden_section(h: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut c = hi - INV_PHI * (hi - lo);
    let mut d = lo + INV_PHI * (hi - lo);
    let mut hc = h(c);
    let mut hd = h(d);
    while hi - lo > 1e-13 {
        if hc < hd {
            hi = d;
            d = c;
            hd = hc;
            c = hi - INV_PHI * (hi - lo);
            hc = h(c);
        } else {
            lo = c;
            c = d;
            hc = hd;
            d = lo + INV_PHI * (hi - lo);
            hd = h(d);
        }
    }
    0.5 * (lo + hi)
}

/// Coordinate-wise reference minimizer of `t ↦ (1/N) Σ_i φ(t − c_i)`:
/// dense scan over the data range picks the best basin, a golden-section
/// polish narrows it to the value-resolution floor (~√ε), and a bisection on
/// the analytic derivative finishes the job to machine precision.
fn minimize_coordinate(centers: &[f64]) -> f64 {
    let lo = centers.iter().cloned().fold(f64::INFINITY, f64::min) - 1.0;
    let hi = centers.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 1.0;
    let h = |t: f64| -> f64 { centers.iter().map(|c| well(t - c)).sum::<f64>() };
    let dh = |t: f64| -> f64 {
        centers
            .iter()
            .map(|c| well_first_derivative(t - c))
            .sum::<f64>()
    };
    let steps = ((hi - lo) / 0.01).ceil().max(8.0) as usize;
    let mut best_t = lo;
    let mut best_v = h(lo);
    for s in 0..=steps {
        let t = lo + (hi - lo) * s as f64 / steps as f64;
        let v = h(t);
        if v < best_v {
            best_v = v;
            best_t = t;
        }
    }
    let span = (hi - lo) / steps as f64;
    let coarse = golden_section(h, best_t - span, best_t + span);

    // Derivative bisection around the golden-section point. Expand until the
    // derivative changes sign, then halve to the last bit.
    let mut width = 1e-6;
    let (mut a, mut b) = loop {
        let (a, b) = (coarse - width, coarse + width);
        if dh(a) <= 0.0 && dh(b) >= 0.0 {
            break (a, b);
        }
        width *= 2.0;
        if width > span * 4.0 {
            return coarse;
        }
    };
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        if dh(mid) <= 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}

/// Build the separable non-convex sum from explicit well centers.
pub fn nonconvex_from_centers(centers: Vec<Vec<f64>>) -> Result<FiniteSumProblem> {
    if centers.is_empty() {
        return Err(Error::InvalidArgument("need at least one component".into()));
    }
    let n = centers.len();
    let d = centers[0].len();
    if d == 0 || centers.iter().any(|c| c.len() != d) {
        return Err(Error::InvalidArgument("ragged or empty center list".into()));
    }

    let minimizer: Vec<f64> = (0..d)
        .map(|j| {
            let coords: Vec<f64> = centers.iter().map(|c| c[j]).collect();
            minimize_coordinate(&coords)
        })
        .collect();

    let component_minimizers = centers.clone();
    let radius_b = component_minimizers
        .iter()
        .map(|m| norm(m))
        .fold(norm(&minimizer), f64::max);

    let oracle = Arc::new(WellOracle { centers });
    let mut value = 0.0;
    for i in 0..n {
        value += oracle.value(i, &minimizer);
    }
    let metadata = ProblemMetadata {
        smoothness: 2.0,
        strong_convexity: 0.0,
        minimizer,
        optimal_value: value / n as f64,
        component_minimizers,
        radius_b,
        condition_number: None,
    };
    FiniteSumProblem::new(n, d, oracle, metadata)
}

/// Random instance with well centers uniform in `[-2.5, 2.5]^d`.
pub fn make_nonconvex(n: usize, d: usize, seed: u64) -> Result<FiniteSumProblem> {
    if n < 1 || d < 1 {
        return Err(Error::InvalidArgument("need n >= 1 and d >= 1".into()));
    }
    let mut rng = seeded_rng(seed);
    let centers = (0..n)
        .map(|_| (0..d).map(|_| rng.random_range(-2.5..2.5)).collect())
        .collect();
    nonconvex_from_centers(centers)
}
