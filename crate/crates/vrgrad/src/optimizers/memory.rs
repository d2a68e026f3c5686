//! Per-component gradient memory with O(d) estimator evaluation.
//!
//! The table stores the most recently evaluated gradient of each component,
//! the iteration it was taken at, and a running elementwise sum of all
//! entries, so SAG/SAGA/IAG estimators cost one component-gradient evaluation
//! plus O(d) arithmetic instead of an O(Nd) sweep. The running sum is resynced
//! from the table at a fixed refresh cadence to keep float drift below the
//! documented 1e-10 consistency bound on long runs.

use crate::error::Error;
use crate::problems::FiniteSumProblem;
use crate::vecmath::all_finite;
use crate::Result;
use serde::{Deserialize, Serialize};

/// Exact-resync cadence for the running sum (in refreshes).
const RESYNC_PERIOD: usize = 1024;

/// The five gradient estimators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Gd,
    Sgd,
    Sag,
    Saga,
    Iag,
}

impl Algorithm {
    /// True for the estimators that read and update the gradient memory.
    pub fn uses_memory(&self) -> bool {
        matches!(self, Algorithm::Sag | Algorithm::Saga | Algorithm::Iag)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Gd => "gd",
            Algorithm::Sgd => "sgd",
            Algorithm::Sag => "sag",
            Algorithm::Saga => "saga",
            Algorithm::Iag => "iag",
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gd" => Ok(Algorithm::Gd),
            "sgd" => Ok(Algorithm::Sgd),
            "sag" => Ok(Algorithm::Sag),
            "saga" => Ok(Algorithm::Saga),
            "iag" => Ok(Algorithm::Iag),
            other => Err(Error::InvalidArgument(format!(
                "unknown algorithm '{other}'"
            ))),
        }
    }
}

/// Stored gradients `∇f_i(x_{τ_{i,k}})`, their last-access iterations, and the
/// running sum. Entries start at zero and `last_access` at 0, matching the
/// convention that an unsampled component contributes a zero gradient.
#[derive(Debug, Clone)]
pub struct GradientMemory {
    stored: Vec<Vec<f64>>,
    last_access: Vec<usize>,
    running_sum: Vec<f64>,
    ever_sampled: Vec<bool>,
    refreshes: usize,
}

impl GradientMemory {
    pub fn new(n_components: usize, dimension: usize) -> Self {
        Self {
            stored: vec![vec![0.0; dimension]; n_components],
            last_access: vec![0; n_components],
            running_sum: vec![0.0; dimension],
            ever_sampled: vec![false; n_components],
            refreshes: 0,
        }
    }

    pub fn n_components(&self) -> usize {
        self.stored.len()
    }

    pub fn stored(&self, i: usize) -> &[f64] {
        &self.stored[i]
    }

    pub fn last_access(&self, i: usize) -> usize {
        self.last_access[i]
    }

    pub fn ever_sampled(&self, i: usize) -> bool {
        self.ever_sampled[i]
    }

    pub fn running_sum(&self) -> &[f64] {
        &self.running_sum
    }

    /// Direct-summation oracle for the running sum.
    pub fn recompute_sum(&self) -> Vec<f64> {
        let d = self.running_sum.len();
        let mut acc = vec![0.0; d];
        for entry in &self.stored {
            for (a, v) in acc.iter_mut().zip(entry) {
                *a += v;
            }
        }
        acc
    }

    /// `max_i (k − τ_{i,k})` at the start of iteration `k`.
    pub fn max_staleness(&self, k: usize) -> usize {
        self.last_access.iter().map(|t| k - t).max().unwrap_or(0)
    }

    /// Overwrite entry `i` with a gradient taken at iteration `k`.
    pub fn refresh(&mut self, i: usize, gradient: &[f64], k: usize) {
        if self.stored.len() == 1 {
            // The sum of one entry is that entry; keep it exact.
            self.running_sum.copy_from_slice(gradient);
        } else {
            for ((sum, new), old) in self
                .running_sum
                .iter_mut()
                .zip(gradient)
                .zip(&self.stored[i])
            {
                *sum += new - old;
            }
        }
        self.stored[i].copy_from_slice(gradient);
        self.last_access[i] = k;
        self.ever_sampled[i] = true;
        self.refreshes += 1;
        if self.refreshes.is_multiple_of(RESYNC_PERIOD) {
            self.running_sum = self.recompute_sum();
        }
        #[cfg(debug_assertions)]
        if self.refreshes.is_multiple_of(256) {
            use crate::vecmath::{norm, sub};
            let exact = self.recompute_sum();
            let drift = norm(&sub(&self.running_sum, &exact));
            debug_assert!(
                drift <= 1e-10 * norm(&exact).max(1.0),
                "running sum drift {drift}"
            );
        }
    }
}

/// One step of the chosen gradient estimator at `(x_k, i_k, k)`.
///
/// GD ignores `i_k` and returns the full gradient; SGD returns the sampled
/// component gradient; both leave the memory untouched. SAG/IAG return
/// `(running_sum − stored[i_k] + ∇f_{i_k}(x_k))/N` and SAGA returns
/// `running_sum/N + ∇f_{i_k}(x_k) − stored[i_k]`; both then overwrite entry
/// `i_k`, so `τ_{i_k, k+1} = k`.
pub fn estimate_gradient(
    algorithm: Algorithm,
    problem: &FiniteSumProblem,
    memory: &mut GradientMemory,
    x: &[f64],
    i_k: usize,
    k: usize,
) -> Result<Vec<f64>> {
    match algorithm {
        Algorithm::Gd => problem.full_gradient(x),
        Algorithm::Sgd => {
            let g = problem.component_gradient(i_k, x);
            ensure_finite(&g, i_k)?;
            Ok(g)
        }
        Algorithm::Sag | Algorithm::Iag => {
            let fresh = problem.component_gradient(i_k, x);
            ensure_finite(&fresh, i_k)?;
            let inv_n = 1.0 / problem.n_components() as f64;
            let g = memory
                .running_sum()
                .iter()
                .zip(memory.stored(i_k))
                .zip(&fresh)
                .map(|((sum, old), new)| (sum - old + new) * inv_n)
                .collect();
            memory.refresh(i_k, &fresh, k);
            Ok(g)
        }
        Algorithm::Saga => {
            let fresh = problem.component_gradient(i_k, x);
            ensure_finite(&fresh, i_k)?;
            let inv_n = 1.0 / problem.n_components() as f64;
            // Evaluated as (sum/N − old) + new so the memory term cancels
            // exactly when the table is fresh (and bitwise for N = 1).
            let g = memory
                .running_sum()
                .iter()
                .zip(memory.stored(i_k))
                .zip(&fresh)
                .map(|((sum, old), new)| sum * inv_n - old + new)
                .collect();
            memory.refresh(i_k, &fresh, k);
            Ok(g)
        }
    }
}

fn ensure_finite(g: &[f64], index: usize) -> Result<()> {
    if all_finite(g) {
        Ok(())
    } else {
        Err(Error::NumericalFault {
            index,
            detail: "non-finite component gradient".into(),
        })
    }
}

/// Exact average of the SAGA estimator over all `N` equally likely index
/// choices, by brute-force enumeration; equals the full gradient, which is
/// the unbiasedness property. The memory is not mutated.
pub fn saga_unbiasedness_oracle(
    problem: &FiniteSumProblem,
    memory: &GradientMemory,
    x: &[f64],
) -> Result<Vec<f64>> {
    enumeration_mean(problem, memory, x, Algorithm::Saga)
}

/// Same enumeration applied to the SAG estimator; generally differs from the
/// full gradient, exhibiting SAG's bias.
pub fn sag_enumeration_oracle(
    problem: &FiniteSumProblem,
    memory: &GradientMemory,
    x: &[f64],
) -> Result<Vec<f64>> {
    enumeration_mean(problem, memory, x, Algorithm::Sag)
}

fn enumeration_mean(
    problem: &FiniteSumProblem,
    memory: &GradientMemory,
    x: &[f64],
    algorithm: Algorithm,
) -> Result<Vec<f64>> {
    let n = problem.n_components();
    let d = problem.dimension();
    let inv_n = 1.0 / n as f64;
    let mut mean = vec![0.0; d];
    for i in 0..n {
        let fresh = problem.component_gradient(i, x);
        ensure_finite(&fresh, i)?;
        for (j, m) in mean.iter_mut().enumerate() {
            let sum = memory.running_sum()[j];
            let old = memory.stored(i)[j];
            let g = match algorithm {
                Algorithm::Sag => (sum - old + fresh[j]) * inv_n,
                Algorithm::Saga => sum * inv_n - old + fresh[j],
                _ => unreachable!("enumeration applies to memory estimators"),
            };
            *m += g * inv_n;
        }
    }
    Ok(mean)
}
