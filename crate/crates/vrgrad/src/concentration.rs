//! Staleness bounds, Bernstein tail expressions, and Monte Carlo validation
//! of the bounded-staleness good event.
//!
//! The good event for a horizon `K` and window `τ` is that every component's
//! staleness `k − τ_{i,k}` stays at most `τ` for all `i` and all
//! `0 ≤ k ≤ K−1`. The closed-form windows below make that event hold with
//! probability at least `1 − δ`:
//!
//! - I.I.D. uniform sampling: `τ = ⌈(8N/3)·ln(NK/δ)⌉`, from Bernstein's
//!   inequality applied to per-window visit counts and a union bound over
//!   components and iterations.
//! - Stationary ergodic Markov sampling: `τ = ⌈(88·t_mix/π_min)·ln(NK/δ)⌉`,
//!   from a Bernstein inequality for Markov chains. The general
//!   matrix-Bernstein machinery (arbitrary bounded functions of the chain, in
//!   terms of the pseudo spectral gap `γ_ps`) is not implemented; only its
//!   specialization to indicator functions enters here, with `γ_ps` replaced
//!   by the mixing-time lower bound `γ_ps ≥ 1/(2·t_mix)`.
//!
//! Monte Carlo validation simulates index streams only — no optimization —
//! so thousands of replications take milliseconds.

use crate::error::Error;
use crate::samplers::{Sampler, SamplerSpec};
use crate::Result;
use rayon::prelude::*;
use serde::Serialize;

/// 97.5% normal quantile used by the 95% Wilson interval.
const Z_95: f64 = 1.959_963_985;

/// Ceiling with a 1e-9 absolute guard so that formula values which are exact
/// integers in real arithmetic (e.g. `88·ln(e)`) do not round up through
/// float noise.
fn guarded_ceil(x: f64) -> usize {
    (x - 1e-9).ceil().max(0.0) as usize
}

/// Window length making the I.I.D. good event hold with probability `1 − δ`:
/// `⌈(8n/3)·ln(nK/δ)⌉` (natural log).
pub fn staleness_bound_iid(n: usize, horizon: usize, delta: f64) -> Result<usize> {
    if n < 1 || horizon < 1 {
        return Err(Error::InvalidArgument("need n >= 1 and K >= 1".into()));
    }
    check_delta(delta)?;
    let nf = n as f64;
    Ok(guarded_ceil(
        (8.0 * nf / 3.0) * (nf * horizon as f64 / delta).ln(),
    ))
}

/// Window length for stationary Markov sampling:
/// `⌈(88·t_mix/π_min)·ln(nK/δ)⌉`.
pub fn staleness_bound_markov(
    t_mix: usize,
    pi_min: f64,
    n: usize,
    horizon: usize,
    delta: f64,
) -> Result<usize> {
    if t_mix < 1 {
        return Err(Error::InvalidArgument("t_mix must be >= 1".into()));
    }
    if !(pi_min > 0.0 && pi_min <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "pi_min = {pi_min} must lie in (0, 1]"
        )));
    }
    if n < 1 || horizon < 1 {
        return Err(Error::InvalidArgument("need n >= 1 and K >= 1".into()));
    }
    check_delta(delta)?;
    Ok(guarded_ceil(
        (88.0 * t_mix as f64 / pi_min) * (n as f64 * horizon as f64 / delta).ln(),
    ))
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "delta = {delta} must lie in (0, 1)"
        )))
    }
}

/// Sampling regime for tail formulas.
#[derive(Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Iid { n: usize },
    Markov { t_mix: usize, pi_min: f64 },
}

/// Per-(component, window) miss probability before the union bound:
/// `exp(−3τ/(8n))` under I.I.D. sampling, `exp(−τ·π_min/(88·t_mix))` under
/// stationary Markov sampling.
pub fn bernstein_tail(tau: usize, regime: Regime) -> f64 {
    match regime {
        Regime::Iid { n } => (-3.0 * tau as f64 / (8.0 * n as f64)).exp(),
        Regime::Markov { t_mix, pi_min } => (-(tau as f64) * pi_min / (88.0 * t_mix as f64)).exp(),
    }
}

/// 95% Wilson score interval for `successes` out of `trials`.
pub fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z_95 * Z_95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z_95 * ((p * (1.0 - p) + z2 / (4.0 * n)) / n).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// One point of the tail-curve comparison.
#[derive(Debug, Clone, Serialize)]
pub struct TailCurvePoint {
    /// Window length being tested.
    pub tau_candidate: usize,
    /// Closed-form Bernstein tail at this window length.
    pub analytic_tail: f64,
    /// Empirical frequency of missing the tracked component over the window.
    pub empirical_tail: f64,
    /// Half-width of the 95% Wilson interval around `empirical_tail`.
    pub confidence_halfwidth: f64,
}

/// Monte Carlo summary for one regime.
#[derive(Debug, Clone, Serialize)]
pub struct ConcentrationReport {
    pub schema_version: u32,
    pub regime: String,
    pub n: usize,
    pub horizon_k: usize,
    pub delta: f64,
    /// Closed-form window for this regime at (n, K, δ).
    pub tau_theory: usize,
    /// Window actually used for the good-event measurement.
    pub tau_used: usize,
    pub tail_curve: Vec<TailCurvePoint>,
    /// Fraction of replications on which staleness never exceeded `tau_used`.
    pub good_event_frequency: f64,
    /// 95% Wilson interval for `good_event_frequency`.
    pub good_event_ci: (f64, f64),
    pub replications: usize,
    pub base_seed: u64,
    pub rng: String,
}

/// Options for [`monte_carlo_staleness`].
#[derive(Debug, Clone)]
pub struct MonteCarloOptions {
    pub n: usize,
    pub horizon: usize,
    pub delta: f64,
    /// Window for the good-event measurement; `None` uses the regime's
    /// closed-form value.
    pub tau: Option<usize>,
    pub replications: usize,
    pub base_seed: u64,
    /// Window-length grid for the tail curve; `None` picks a default
    /// geometric grid capped at the horizon.
    pub window_grid: Option<Vec<usize>>,
}

fn default_window_grid(horizon: usize, tau: usize) -> Vec<usize> {
    let mut grid: Vec<usize> = [1usize, 2, 5, 10, 20, 40, 80, 160, 320]
        .iter()
        .cloned()
        .filter(|w| *w <= horizon)
        .collect();
    if tau <= horizon && !grid.contains(&tau) {
        grid.push(tau);
    }
    grid.sort_unstable();
    grid
}

struct ReplicateOutcome {
    good: bool,
    /// First iteration at which the tracked component was sampled.
    first_hit: usize,
}

/// Simulate index streams and measure (a) the frequency of the good event at
/// `tau_used` and (b) per-window miss frequencies for one tracked component,
/// compared against [`bernstein_tail`].
///
/// The tracked component is `0` under I.I.D. sampling (all components are
/// exchangeable) and the one with minimal stationary mass under Markov
/// sampling (the component the tail formula is tightest for).
pub fn monte_carlo_staleness(
    spec: &SamplerSpec,
    options: &MonteCarloOptions,
) -> Result<ConcentrationReport> {
    if options.replications < 100 {
        return Err(Error::InvalidArgument(
            "need at least 100 replications".into(),
        ));
    }
    let n = options.n;
    let horizon = options.horizon;
    check_delta(options.delta)?;

    // Probe sampler: validates the spec and yields mixing data for Markov.
    let probe = Sampler::new(spec, n, options.base_seed, 0)?;
    let (regime, regime_name, tracked) = match spec {
        SamplerSpec::Markov { .. } => {
            let mixing = probe.mixing().expect("markov sampler has mixing data");
            let tracked = mixing
                .stationary
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.total_cmp(b.1))
                .map(|(i, _)| i)
                .unwrap_or(0);
            (
                Regime::Markov {
                    t_mix: mixing.t_mix,
                    pi_min: mixing.pi_min,
                },
                "markov",
                tracked,
            )
        }
        _ => (Regime::Iid { n }, "iid", 0),
    };
    let tau_theory = match regime {
        Regime::Iid { n } => staleness_bound_iid(n, horizon, options.delta)?,
        Regime::Markov { t_mix, pi_min } => {
            staleness_bound_markov(t_mix, pi_min, n, horizon, options.delta)?
        }
    };
    let tau_used = options.tau.unwrap_or(tau_theory);

    let outcomes: Vec<ReplicateOutcome> = (0..options.replications)
        .into_par_iter()
        .map(|rep| {
            let mut sampler = Sampler::new(spec, n, options.base_seed, rep as u64)
                .expect("spec validated by probe");
            let mut last = vec![0usize; n];
            let mut good = true;
            let mut first_hit = horizon;
            for k in 0..horizon {
                let staleness = (0..n).map(|i| k - last[i]).max().unwrap_or(0);
                if staleness > tau_used {
                    good = false;
                }
                let i_k = sampler.next_index();
                if i_k == tracked && first_hit == horizon {
                    first_hit = k;
                }
                last[i_k] = k;
            }
            ReplicateOutcome { good, first_hit }
        })
        .collect();

    let reps = options.replications as u64;
    let good_count = outcomes.iter().filter(|o| o.good).count() as u64;
    let good_freq = good_count as f64 / reps as f64;
    let (lo, hi) = wilson_interval(good_count, reps);

    let grid = options
        .window_grid
        .clone()
        .unwrap_or_else(|| default_window_grid(horizon, tau_used));
    let tail_curve = grid
        .into_iter()
        .map(|w| {
            // The tracked component is missed over the initial window of
            // length w exactly when its first hit comes at iteration >= w.
            let misses = outcomes.iter().filter(|o| o.first_hit >= w).count() as u64;
            let emp = misses as f64 / reps as f64;
            let (lo, hi) = wilson_interval(misses, reps);
            TailCurvePoint {
                tau_candidate: w,
                analytic_tail: bernstein_tail(w, regime),
                empirical_tail: emp,
                confidence_halfwidth: 0.5 * (hi - lo),
            }
        })
        .collect();

    Ok(ConcentrationReport {
        schema_version: crate::SCHEMA_VERSION,
        regime: regime_name.to_string(),
        n,
        horizon_k: horizon,
        delta: options.delta,
        tau_theory,
        tau_used,
        tail_curve,
        good_event_frequency: good_freq,
        good_event_ci: (lo, hi),
        replications: options.replications,
        base_seed: options.base_seed,
        rng: crate::rng::RNG_NAME.to_string(),
    })
}
