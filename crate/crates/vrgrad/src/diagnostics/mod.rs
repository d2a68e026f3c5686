//! Per-iteration inequality checks and closed-form rate envelopes.
//!
//! Every check is a predicate over recorded trace rows with numerical slack
//! to absorb float accumulation. Slack constants live here and nowhere else:
//! inequalities whose sides are computed through long accumulations get
//! relative slack `1e-9`; the one-step contraction check, whose two sides
//! come from the same trace row pair, gets `1e-12`; envelope comparisons add
//! a small absolute floor because their right-hand sides decay to the
//! cancellation noise of `f(x_k) − f(x*)`.
//!
//! The window checks (gradient error, gradient bound, contraction) only make
//! sense for `k ≥ τ`, when the window of past estimator norms is fully
//! defined, and are only sound on runs where measured staleness stayed within
//! `τ` — the caller is responsible for conditioning on that good event.

mod lyapunov;

pub use lyapunov::LyapunovState;

use crate::error::Error;
use crate::optimizers::{RunTrace, TraceRow};
use crate::problems::ProblemMetadata;
use crate::Result;
use serde::Serialize;

/// Relative slack for accumulated-quantity checks.
pub const CHECK_SLACK_REL: f64 = 1e-9;
/// Relative slack for the one-step contraction check.
pub const CONTRACTION_SLACK_REL: f64 = 1e-12;
/// Absolute slack floor for envelope comparisons, covering cancellation noise
/// in `f(x_k) − f(x*)` once the envelope has decayed below it.
pub const ENVELOPE_ABS_SLACK: f64 = 1e-12;

/// Result of scanning a predicate over a trace.
#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub passed: bool,
    /// First iteration at which the predicate failed, if any.
    pub first_violation_k: Option<usize>,
    /// Min over checked iterations of (bound − value), before slack.
    pub margin_min: f64,
    /// Number of iterations the predicate was evaluated at.
    pub checked: usize,
}

impl CheckOutcome {
    fn vacuous() -> Self {
        Self {
            passed: true,
            first_violation_k: None,
            margin_min: f64::INFINITY,
            checked: 0,
        }
    }

    fn observe(&mut self, k: usize, margin: f64, ok: bool) {
        self.checked += 1;
        if margin < self.margin_min {
            self.margin_min = margin;
        }
        if !ok && self.passed {
            self.passed = false;
            self.first_violation_k = Some(k);
        }
    }

    /// Fold another outcome into this one (worst of both).
    pub fn merge(&mut self, other: &CheckOutcome) {
        self.checked += other.checked;
        if other.margin_min < self.margin_min {
            self.margin_min = other.margin_min;
        }
        if !other.passed && self.passed {
            self.passed = false;
            self.first_violation_k = other.first_violation_k;
        }
    }
}

/// Gradient-error bound at one row: `‖e_k‖² ≤ 4α²L²τ·U_k`.
///
/// Errors if asked about a pre-window iteration.
pub fn check_gradient_error(row: &TraceRow, l: f64, alpha: f64, tau: usize) -> Result<bool> {
    if row.k < tau {
        return Err(Error::OutOfWindow { k: row.k, tau });
    }
    let bound = 4.0 * alpha * alpha * l * l * tau as f64 * row.u;
    Ok(row.err_norm_sq <= bound + CHECK_SLACK_REL * row.u.max(1.0))
}

/// One-step contraction: `V_{k+1} ≤ (1 − αμ/4)·V_k`.
pub fn check_contraction(v_prev: f64, v_next: f64, alpha: f64, mu: f64) -> bool {
    v_next <= (1.0 - alpha * mu / 4.0) * v_prev + CONTRACTION_SLACK_REL * v_prev.max(1.0)
}

/// Burn-in verdict over iterations `0..=τ`.
#[derive(Debug, Clone, Serialize)]
pub struct BurnInReport {
    /// `‖x_k‖ ≤ B` for all `k ≤ τ`.
    pub iterates_bounded: bool,
    /// `‖g_k‖ ≤ 6LB` for all `k ≤ τ` (from recorded estimator norms).
    pub gradients_bounded: bool,
    /// `V_τ ≤ 3LB²`.
    pub lyapunov_bounded: bool,
    pub v_tau: f64,
    pub v_tau_bound: f64,
    pub max_x_norm: f64,
    pub max_est_norm: f64,
    pub passed: bool,
}

/// Check the burn-in bounds with radius `b` (pass `‖x*‖` instead of `B` for
/// frozen-burn-in runs).
pub fn check_burn_in(trace: &RunTrace, l: f64, b: f64, tau: usize) -> Result<BurnInReport> {
    if trace.rows.len() < tau + 1 || trace.x_norms.len() < tau + 1 {
        return Err(Error::InsufficientTrace {
            needed: tau + 1,
            actual: trace.rows.len(),
        });
    }
    let slack = 1.0 + CHECK_SLACK_REL;
    let max_x_norm = trace.x_norms[..=tau]
        .iter()
        .cloned()
        .fold(0.0_f64, f64::max);
    let max_est_norm = trace.rows[..=tau]
        .iter()
        .map(|row| row.est_norm_sq.sqrt())
        .fold(0.0_f64, f64::max);
    let v_tau = trace.rows[tau].v;
    let v_tau_bound = 3.0 * l * b * b;
    let iterates_bounded = max_x_norm <= b * slack;
    let gradients_bounded = max_est_norm <= 6.0 * l * b * slack;
    let lyapunov_bounded = v_tau <= v_tau_bound * slack + ENVELOPE_ABS_SLACK;
    Ok(BurnInReport {
        iterates_bounded,
        gradients_bounded,
        lyapunov_bounded,
        v_tau,
        v_tau_bound,
        max_x_norm,
        max_est_norm,
        passed: iterates_bounded && gradients_bounded && lyapunov_bounded,
    })
}

/// Which final-rate statement an envelope instantiates. The strongly convex,
/// Markov-sampling, and deterministic-order cases share one closed form; the
/// non-convex case bounds the running average of squared gradient norms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvelopeKind {
    StronglyConvex,
    NonConvex,
    Markov,
    Iag,
}

/// Closed-form right-hand side of a final-rate theorem, as a function of the
/// iteration index.
#[derive(Debug, Clone, Serialize)]
pub struct Envelope {
    pub kind: EnvelopeKind,
    pub tau: usize,
    pub horizon: usize,
    /// `6LB²` for the geometric envelopes; `768L²B²τ` for the non-convex one.
    pub prefactor: f64,
    /// Geometric decay `1 − 1/(64τκ)` (1.0 for the non-convex envelope).
    pub per_iteration: f64,
}

impl Envelope {
    /// Smallest iterate index the envelope claims anything about.
    pub fn valid_from(&self) -> usize {
        match self.kind {
            EnvelopeKind::NonConvex => 2 * self.tau,
            _ => self.tau + 1,
        }
    }

    /// Envelope value at iterate index `k`.
    pub fn bound(&self, k: usize) -> f64 {
        match self.kind {
            EnvelopeKind::NonConvex => self.prefactor / k as f64,
            _ => self.prefactor * self.per_iteration.powi(k as i32),
        }
    }
}

/// Build the envelope for a theorem from problem metadata.
///
/// The geometric envelopes bound `f(x_k) − f(x*)` by `6LB²(1 − 1/(64τκ))^k`
/// for `k > τ` and need `μ > 0`; the non-convex envelope bounds the running
/// average `(1/(k−τ))·Σ_{j=τ}^{k−1}‖∇f(x_j)‖²` by `768L²B²τ/k` for `k ≥ 2τ`.
pub fn rate_envelope(
    kind: EnvelopeKind,
    metadata: &ProblemMetadata,
    tau: usize,
    horizon: usize,
) -> Result<Envelope> {
    let l = metadata.smoothness;
    let b = metadata.radius_b;
    match kind {
        EnvelopeKind::NonConvex => Ok(Envelope {
            kind,
            tau,
            horizon,
            prefactor: 768.0 * l * l * b * b * tau as f64,
            per_iteration: 1.0,
        }),
        EnvelopeKind::StronglyConvex | EnvelopeKind::Markov | EnvelopeKind::Iag => {
            let kappa = metadata.condition_number.ok_or_else(|| {
                Error::InvalidCombination(
                    "geometric envelope needs a strongly convex problem".into(),
                )
            })?;
            Ok(Envelope {
                kind,
                tau,
                horizon,
                prefactor: 6.0 * l * b * b,
                per_iteration: 1.0 - 1.0 / (64.0 * tau as f64 * kappa),
            })
        }
    }
}

/// Per-iteration decay exponent `1/(64τκ)` of the geometric envelopes.
pub fn theory_exponent(kappa: f64, tau: usize) -> f64 {
    1.0 / (64.0 * tau as f64 * kappa)
}

/// `c_τ = 2/(25τ(2τ+1))` from the previously best deterministic-order rate.
pub fn prior_iag_c_tau(tau: usize) -> f64 {
    2.0 / (25.0 * tau as f64 * (2.0 * tau as f64 + 1.0))
}

/// Per-iteration exponent of the prior deterministic-order rate
/// `(1 − c_τ/(κ+1)²)^{2K}`, i.e. `2·c_τ/(κ+1)²`.
pub fn prior_iag_exponent(kappa: f64, tau: usize) -> f64 {
    2.0 * prior_iag_c_tau(tau) / ((kappa + 1.0) * (kappa + 1.0))
}

/// Right-hand side of the gradient-descent rate `(1 − 1/κ)^k · r_0`.
pub fn gd_rate_bound(kappa: f64, r0: f64, k: usize) -> f64 {
    (1.0 - 1.0 / kappa).powi(k as i32) * r0
}

// ---------------------------------------------------------------------------
// Whole-trace scans
// ---------------------------------------------------------------------------

/// Approximate descent at every recorded step:
/// `r_{k+1} ≤ r_k − (α/4)‖∇f(x_k)‖² + α‖e_k‖²` (valid for `α ≤ 1/(4L)`).
pub fn scan_descent(trace: &RunTrace, alpha: f64) -> CheckOutcome {
    let mut outcome = CheckOutcome::vacuous();
    for (idx, row) in trace.rows.iter().enumerate() {
        let Some(r_next) = trace.r_at(idx + 1) else {
            break;
        };
        let bound = row.r - alpha / 4.0 * row.grad_norm_sq + alpha * row.err_norm_sq;
        let slack = CHECK_SLACK_REL * row.r.abs().max(1.0);
        outcome.observe(row.k, bound - r_next, r_next <= bound + slack);
    }
    outcome
}

/// Gradient-error bound for all `k ≥ τ`.
pub fn scan_gradient_error(trace: &RunTrace, l: f64, alpha: f64, tau: usize) -> CheckOutcome {
    let mut outcome = CheckOutcome::vacuous();
    let coeff = 4.0 * alpha * alpha * l * l * tau as f64;
    for row in trace.rows.iter().filter(|row| row.k >= tau) {
        let bound = coeff * row.u;
        let slack = CHECK_SLACK_REL * row.u.max(1.0);
        outcome.observe(
            row.k,
            bound - row.err_norm_sq,
            row.err_norm_sq <= bound + slack,
        );
    }
    outcome
}

/// Estimator-norm bound `‖g_k‖² ≤ 2‖∇f(x_k)‖² + 8L²τα²·U_k` for all `k ≥ τ`.
pub fn scan_gradient_bound(trace: &RunTrace, l: f64, alpha: f64, tau: usize) -> CheckOutcome {
    let mut outcome = CheckOutcome::vacuous();
    let coeff = 8.0 * l * l * tau as f64 * alpha * alpha;
    for row in trace.rows.iter().filter(|row| row.k >= tau) {
        let bound = 2.0 * row.grad_norm_sq + coeff * row.u;
        let slack = CHECK_SLACK_REL * bound.max(1.0);
        outcome.observe(
            row.k,
            bound - row.est_norm_sq,
            row.est_norm_sq <= bound + slack,
        );
    }
    outcome
}

/// One-step contraction `V_{k+1} ≤ (1 − αμ/4)·V_k` over recorded pairs with
/// `k ≥ τ`.
pub fn scan_contraction(trace: &RunTrace, mu: f64, alpha: f64, tau: usize) -> CheckOutcome {
    let mut outcome = CheckOutcome::vacuous();
    let factor = 1.0 - alpha * mu / 4.0;
    for pair in trace.rows.windows(2) {
        if pair[0].k < tau {
            continue;
        }
        let bound = factor * pair[0].v;
        outcome.observe(
            pair[0].k,
            bound - pair[1].v,
            check_contraction(pair[0].v, pair[1].v, alpha, mu),
        );
    }
    outcome
}

/// `V` nonincreasing from `k = τ` on.
pub fn scan_monotone_v(trace: &RunTrace, tau: usize) -> CheckOutcome {
    let mut outcome = CheckOutcome::vacuous();
    for pair in trace.rows.windows(2) {
        if pair[0].k < tau {
            continue;
        }
        let slack = CHECK_SLACK_REL * pair[0].v.max(1.0);
        outcome.observe(
            pair[0].k,
            pair[0].v - pair[1].v,
            pair[1].v <= pair[0].v + slack,
        );
    }
    outcome
}

/// Sub-optimality dominated by a geometric envelope at every valid iterate
/// index, including the final one.
pub fn scan_envelope(trace: &RunTrace, envelope: &Envelope) -> CheckOutcome {
    let mut outcome = CheckOutcome::vacuous();
    let scale = trace.r_at(0).map_or(1.0, |r0| r0.abs().max(1.0));
    for k in envelope.valid_from()..=trace.iterations {
        let Some(r) = trace.r_at(k) else { continue };
        let bound = envelope.bound(k);
        let slack = CHECK_SLACK_REL * bound + ENVELOPE_ABS_SLACK * scale;
        outcome.observe(k, bound - r, r <= bound + slack);
    }
    outcome
}

/// Running-average gradient norm dominated by the non-convex envelope:
/// `(1/(k−τ))·Σ_{j=τ}^{k−1}‖∇f(x_j)‖² ≤ prefactor/k` for all `k ≥ 2τ`.
pub fn scan_nonconvex_average(trace: &RunTrace, envelope: &Envelope) -> CheckOutcome {
    let mut outcome = CheckOutcome::vacuous();
    let tau = envelope.tau;
    let mut running = 0.0;
    for row in trace.rows.iter().filter(|row| row.k >= tau) {
        running += row.grad_norm_sq;
        let k = row.k + 1;
        if k < 2 * tau {
            continue;
        }
        let average = running / (k - tau) as f64;
        let bound = envelope.bound(k);
        let slack = CHECK_SLACK_REL * bound.max(1.0);
        outcome.observe(k, bound - average, average <= bound + slack);
    }
    outcome
}

/// GD sanity: `r_k ≤ (1 − 1/κ)^k · r_0` at every iterate index.
pub fn scan_gd_rate(trace: &RunTrace, kappa: f64) -> CheckOutcome {
    let mut outcome = CheckOutcome::vacuous();
    let Some(r0) = trace.r_at(0) else {
        return outcome;
    };
    for k in 1..=trace.iterations {
        let Some(r) = trace.r_at(k) else { continue };
        let bound = gd_rate_bound(kappa, r0, k);
        let slack = CHECK_SLACK_REL * bound.abs() + ENVELOPE_ABS_SLACK * r0.abs().max(1.0);
        outcome.observe(k, bound - r, r <= bound + slack);
    }
    outcome
}

/// Window bookkeeping: recorded `U`/`W` match direct summation of the
/// recorded estimator norms, `W ≤ τU`, and `W` advances by
/// `W_{k+1} = W_k − U_k + τ‖g_k‖²`.
pub fn scan_window_consistency(trace: &RunTrace, tau: usize) -> CheckOutcome {
    let mut outcome = CheckOutcome::vacuous();
    let est: Vec<f64> = trace.rows.iter().map(|row| row.est_norm_sq).collect();
    for (idx, row) in trace.rows.iter().enumerate() {
        let lo = idx.saturating_sub(tau);
        let mut u = 0.0;
        let mut w = 0.0;
        for j in 1..=(idx - lo) {
            let g = est[idx - j];
            u += g;
            w += (tau - j + 1) as f64 * g;
        }
        let tol_u = CHECK_SLACK_REL * u.max(1.0);
        let tol_w = CHECK_SLACK_REL * w.max(1.0);
        let direct_ok = (row.u - u).abs() <= tol_u && (row.w - w).abs() <= tol_w;
        let cap_ok = row.w <= tau as f64 * row.u + tol_w;
        let fact_one_ok = match trace.rows.get(idx + 1) {
            Some(next) => {
                let expected = row.w - row.u + tau as f64 * row.est_norm_sq;
                (next.w - expected).abs() <= CHECK_SLACK_REL * expected.abs().max(1.0)
            }
            None => true,
        };
        let margin = (tau as f64 * row.u - row.w).min(tol_u - (row.u - u).abs());
        outcome.observe(row.k, margin, direct_ok && cap_ok && fact_one_ok);
    }
    outcome
}

#[cfg(test)]
mod tests;
