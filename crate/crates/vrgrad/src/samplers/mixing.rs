//! Exact mixing analysis for finite Markov chains given by explicit
//! row-stochastic transition matrices.
//!
//! Working with explicit matrices keeps everything exact: the stationary
//! distribution comes from a linear solve, and the worst-case total-variation
//! distance to stationarity is read off matrix powers, so the staleness
//! formulas downstream consume exact `t_mix` and `π_min` rather than
//! estimates.

use crate::error::Error;
use crate::Result;
use nalgebra::{DMatrix, DVector};
use serde::Serialize;

/// Row-sum tolerance for accepting a transition matrix.
pub const ROW_SUM_TOL: f64 = 1e-12;

/// Stationarity residual tolerance for the computed distribution.
pub const STATIONARY_TOL: f64 = 1e-10;

/// Mixing summary of an ergodic finite chain.
#[derive(Debug, Clone, Serialize)]
pub struct MixingReport {
    /// Stationary distribution π (entries nonnegative, sum 1).
    pub stationary: Vec<f64>,
    /// Minimum visitation probability `π_min = min_i π_i`.
    pub pi_min: f64,
    /// `d_mix(k)` for `k = 1..=t_mix`: worst-row total-variation distance of
    /// the k-step kernel from π.
    pub d_mix: Vec<f64>,
    /// Least `k` with `d_mix(k) ≤ 1/4`.
    pub t_mix: usize,
    /// Lower bound `1/(2·t_mix)` on the pseudo spectral gap.
    pub gamma_ps_lower: f64,
}

/// Check that `p` is square, row-stochastic, and primitive (some power is
/// entrywise positive, i.e. the chain is irreducible and aperiodic).
pub fn validate_chain(p: &[Vec<f64>]) -> Result<()> {
    let n = p.len();
    if n == 0 {
        return Err(Error::InvalidChain("empty transition matrix".into()));
    }
    for (i, row) in p.iter().enumerate() {
        if row.len() != n {
            return Err(Error::InvalidChain(format!(
                "row {i} has length {}",
                row.len()
            )));
        }
        if row.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidChain(format!(
                "row {i} has negative or non-finite entries"
            )));
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > ROW_SUM_TOL {
            return Err(Error::InvalidChain(format!("row {i} sums to {sum}")));
        }
    }
    // Primitivity via boolean reachability: by Wielandt's bound a primitive
    // matrix has an all-positive power at exponent (n-1)^2 + 1.
    let mut reach: Vec<Vec<bool>> = p
        .iter()
        .map(|row| row.iter().map(|v| *v > 0.0).collect())
        .collect();
    let limit = (n - 1) * (n - 1) + 1;
    let mut power = 1usize;
    loop {
        if reach.iter().all(|row| row.iter().all(|b| *b)) {
            return Ok(());
        }
        if power > limit {
            return Err(Error::InvalidChain(
                "chain is reducible or periodic (no entrywise-positive power)".into(),
            ));
        }
        // Square the boolean matrix.
        let mut next = vec![vec![false; n]; n];
        for (i, row) in next.iter_mut().enumerate() {
            for (k, mid) in reach.iter().enumerate() {
                if reach[i][k] {
                    for (j, cell) in row.iter_mut().enumerate() {
                        *cell |= mid[j];
                    }
                }
            }
        }
        reach = next;
        power *= 2;
    }
}

/// Stationary distribution via the linear system `πP = π`, `Σπ = 1`.
pub fn stationary_distribution(p: &[Vec<f64>]) -> Result<Vec<f64>> {
    validate_chain(p)?;
    let n = p.len();
    // (Pᵀ - I) π = 0 with the last equation replaced by Σ π_i = 1.
    let mut system = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            system[(i, j)] = p[j][i] - if i == j { 1.0 } else { 0.0 };
        }
    }
    for j in 0..n {
        system[(n - 1, j)] = 1.0;
    }
    let mut rhs = DVector::<f64>::zeros(n);
    rhs[n - 1] = 1.0;
    let pi = system
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::InvalidChain("stationarity system is singular".into()))?;
    let mut pi: Vec<f64> = pi.iter().cloned().collect();
    // Clean tiny negative round-off and renormalize.
    for v in pi.iter_mut() {
        if *v < 0.0 && *v > -1e-12 {
            *v = 0.0;
        }
    }
    let total: f64 = pi.iter().sum();
    for v in pi.iter_mut() {
        *v /= total;
    }
    let mut residual: f64 = 0.0;
    for j in 0..n {
        let image: f64 = (0..n).map(|i| pi[i] * p[i][j]).sum();
        residual = residual.max((image - pi[j]).abs());
    }
    if residual > STATIONARY_TOL {
        return Err(Error::InvalidChain(format!(
            "stationarity residual {residual}"
        )));
    }
    Ok(pi)
}

/// Exact mixing-time analysis: `d_mix(k) = max_i ½ Σ_j |P^k(i,j) − π_j|`
/// from matrix powers, and `t_mix` the least `k` with `d_mix(k) ≤ 1/4`.
///
/// Fails with a horizon error if `t_mix > k_max`.
pub fn analyze_mixing(p: &[Vec<f64>], k_max: usize) -> Result<MixingReport> {
    if k_max < 1 {
        return Err(Error::InvalidArgument("k_max must be at least 1".into()));
    }
    let pi = stationary_distribution(p)?;
    let n = p.len();
    let dense = DMatrix::<f64>::from_fn(n, n, |i, j| p[i][j]);
    let mut power = dense.clone();
    let mut d_mix = Vec::new();
    let mut t_mix = None;
    for k in 1..=k_max {
        if k > 1 {
            power = &power * &dense;
        }
        let mut worst: f64 = 0.0;
        for i in 0..n {
            let tv: f64 = 0.5 * (0..n).map(|j| (power[(i, j)] - pi[j]).abs()).sum::<f64>();
            worst = worst.max(tv);
        }
        d_mix.push(worst);
        if worst <= 0.25 {
            t_mix = Some(k);
            break;
        }
    }
    let t_mix = t_mix.ok_or(Error::HorizonExceeded { k_max })?;
    let pi_min = pi.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(MixingReport {
        stationary: pi,
        pi_min,
        d_mix,
        t_mix,
        gamma_ps_lower: 1.0 / (2.0 * t_mix as f64),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lazy_two_state() -> Vec<Vec<f64>> {
        vec![vec![0.9, 0.1], vec![0.1, 0.9]]
    }

    #[test]
    fn uniform_matrix_mixes_in_one_step() {
        let n = 4;
        let p = vec![vec![1.0 / n as f64; n]; n];
        let report = analyze_mixing(&p, 10).unwrap();
        assert_eq!(report.t_mix, 1);
        assert_eq!(report.d_mix[0], 0.0);
    }

    #[test]
    fn lazy_two_state_mixing_curve() {
        // Eigendecomposition gives d_mix(k) = 0.5 * 0.8^k:
        // 0.5*0.8^3 = 0.256 > 1/4, 0.5*0.8^4 = 0.2048 <= 1/4.
        let report = analyze_mixing(&lazy_two_state(), 100).unwrap();
        assert_eq!(report.t_mix, 4);
        for (idx, d) in report.d_mix.iter().enumerate() {
            let k = idx + 1;
            let expected = 0.5 * 0.8_f64.powi(k as i32);
            assert!((d - expected).abs() < 1e-12, "k={k}: {d} vs {expected}");
        }
        assert!((report.stationary[0] - 0.5).abs() < 1e-12);
        assert!((report.stationary[1] - 0.5).abs() < 1e-12);
        assert!((report.pi_min - 0.5).abs() < 1e-12);
        assert!((report.gamma_ps_lower - 1.0 / 8.0).abs() < 1e-15);
    }

    #[test]
    fn asymmetric_two_state_stationary() {
        let p = vec![vec![0.9, 0.1], vec![0.2, 0.8]];
        let report = analyze_mixing(&p, 1000).unwrap();
        assert!((report.stationary[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((report.stationary[1] - 1.0 / 3.0).abs() < 1e-12);
        assert!((report.pi_min - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn d_mix_is_nonincreasing() {
        let report = analyze_mixing(&lazy_two_state(), 100).unwrap();
        for w in report.d_mix.windows(2) {
            assert!(w[1] <= w[0] + 1e-15);
        }
    }

    #[test]
    fn periodic_chain_rejected() {
        let p = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        match analyze_mixing(&p, 100) {
            Err(Error::InvalidChain(_)) => {}
            other => panic!("expected invalid chain, got {other:?}"),
        }
    }

    #[test]
    fn reducible_chain_rejected() {
        let p = vec![
            vec![1.0, 0.0, 0.0],
            vec![0.0, 0.5, 0.5],
            vec![0.0, 0.5, 0.5],
        ];
        match validate_chain(&p) {
            Err(Error::InvalidChain(_)) => {}
            other => panic!("expected invalid chain, got {other:?}"),
        }
    }

    #[test]
    fn horizon_exceeded_surfaces() {
        match analyze_mixing(&lazy_two_state(), 2) {
            Err(Error::HorizonExceeded { k_max: 2 }) => {}
            other => panic!("expected horizon error, got {other:?}"),
        }
    }

    #[test]
    fn bad_row_sum_rejected() {
        let p = vec![vec![0.9, 0.2], vec![0.1, 0.9]];
        assert!(matches!(validate_chain(&p), Err(Error::InvalidChain(_))));
    }
}
