//! Parameter sweeps and empirical rate fitting.

use super::config::{ExperimentConfig, ProblemSpec, SamplerKind};
use super::execute_runs;
use crate::diagnostics::{prior_iag_exponent, theory_exponent};
use crate::error::Error;
use crate::optimizers::{Algorithm, RunTrace, TauMode};
use crate::Result;
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Least-squares fit of `ln r_k ≈ ln c + k·ln ρ`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RateFit {
    /// Fitted per-iteration factor ρ.
    pub rho: f64,
    /// `−ln ρ`, comparable to the closed-form exponents.
    pub exponent: f64,
    /// Number of points entering the fit.
    pub points: usize,
    /// Iterate-index range the fit was taken over.
    pub window: (usize, usize),
}

/// Fit a geometric decay through `(k, r_k)` points (r must be positive).
pub fn fit_geometric<I: IntoIterator<Item = (usize, f64)>>(points: I) -> Option<RateFit> {
    let data: Vec<(f64, f64)> = points
        .into_iter()
        .filter(|(_, r)| *r > 0.0 && r.is_finite())
        .map(|(k, r)| (k as f64, r.ln()))
        .collect();
    if data.len() < 2 {
        return None;
    }
    let n = data.len() as f64;
    let mean_k = data.iter().map(|(k, _)| k).sum::<f64>() / n;
    let mean_y = data.iter().map(|(_, y)| y).sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var = 0.0;
    for (k, y) in &data {
        cov += (k - mean_k) * (y - mean_y);
        var += (k - mean_k) * (k - mean_k);
    }
    if var == 0.0 {
        return None;
    }
    let slope = cov / var;
    Some(RateFit {
        rho: slope.exp(),
        exponent: -slope,
        points: data.len(),
        window: (data[0].0 as usize, data[data.len() - 1].0 as usize),
    })
}

/// Fit the post-burn-in tail of a trace: only the last half of iterations
/// past `τ` enter, and values at the cancellation floor are dropped.
pub fn fit_linear_rate(trace: &RunTrace, tau: usize) -> Option<RateFit> {
    if trace.iterations <= tau + 1 {
        return None;
    }
    let start = tau + (trace.iterations - tau) / 2;
    let floor = trace.r_at(0).map_or(1e-14, |r0| 1e-14 * r0.abs().max(1.0));
    let points = (start..=trace.iterations)
        .filter_map(|k| trace.r_at(k).map(|r| (k, r)))
        .filter(|(_, r)| *r > floor);
    fit_geometric(points)
}

/// Grid axes; absent axes keep the base config's value.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepGrid {
    pub kappa: Option<Vec<f64>>,
    pub n: Option<Vec<usize>>,
    pub tau: Option<Vec<usize>>,
    pub algorithm: Option<Vec<Algorithm>>,
    pub sampler: Option<Vec<SamplerKind>>,
}

/// Sweep description: a base experiment plus grid axes.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub base: ExperimentConfig,
    #[serde(default)]
    pub grid: SweepGrid,
}

/// One summary row per grid cell.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub algorithm: String,
    pub sampler: String,
    pub n: usize,
    pub kappa: Option<f64>,
    pub tau: usize,
    pub alpha: f64,
    pub iterations: usize,
    /// Mean fitted per-iteration exponent over fitted replications.
    pub fitted_exponent: Option<f64>,
    /// `1/(64τκ)` when κ is defined.
    pub theory_exponent: Option<f64>,
    /// Prior deterministic-order exponent `2c_τ/(κ+1)²`.
    pub prior_iag_exponent: Option<f64>,
    /// Iterate-index window of the first replication's fit.
    pub fit_window: Option<(usize, usize)>,
    pub final_r_mean: f64,
    pub good_event_frequency: f64,
    pub replications: usize,
}

pub const SWEEP_CSV_HEADER: &str = "algorithm,sampler,n,kappa,tau,alpha,iterations,fitted_exponent,theory_exponent,prior_iag_exponent,fit_window_start,fit_window_end,final_r_mean,good_event_frequency,replications";

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "".to_string(), |x| x.to_string())
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{SWEEP_CSV_HEADER}")?;
    for row in rows {
        let (w0, w1) = row
            .fit_window
            .map_or((String::new(), String::new()), |(a, b)| {
                (a.to_string(), b.to_string())
            });
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            row.algorithm,
            row.sampler,
            row.n,
            opt(row.kappa),
            row.tau,
            row.alpha,
            row.iterations,
            opt(row.fitted_exponent),
            opt(row.theory_exponent),
            opt(row.prior_iag_exponent),
            w0,
            w1,
            row.final_r_mean,
            row.good_event_frequency,
            row.replications
        )?;
    }
    Ok(())
}

fn cell_configs(sweep: &SweepConfig) -> Result<Vec<ExperimentConfig>> {
    let one = |c: ExperimentConfig| vec![c];
    let mut cells = one(sweep.base.clone());

    if let Some(kappas) = &sweep.grid.kappa {
        let mut next = Vec::new();
        for cell in &cells {
            for &kappa in kappas {
                let mut c = cell.clone();
                match &mut c.problem {
                    ProblemSpec::Quadratic { kappa: k, .. } => *k = kappa,
                    _ => {
                        return Err(Error::Config(
                            "kappa axis needs a quadratic base problem".into(),
                        ))
                    }
                }
                next.push(c);
            }
        }
        cells = next;
    }
    if let Some(ns) = &sweep.grid.n {
        let mut next = Vec::new();
        for cell in &cells {
            for &n in ns {
                let mut c = cell.clone();
                match &mut c.problem {
                    ProblemSpec::Quadratic { n: m, .. }
                    | ProblemSpec::Logistic { n: m, .. }
                    | ProblemSpec::Nonconvex { n: m, .. } => *m = n,
                }
                next.push(c);
            }
        }
        cells = next;
    }
    if let Some(taus) = &sweep.grid.tau {
        let mut next = Vec::new();
        for cell in &cells {
            for &tau in taus {
                let mut c = cell.clone();
                c.run.tau_mode = TauMode::Manual;
                c.run.tau = Some(tau);
                next.push(c);
            }
        }
        cells = next;
    }
    if let Some(algorithms) = &sweep.grid.algorithm {
        let mut next = Vec::new();
        for cell in &cells {
            for &algorithm in algorithms {
                let mut c = cell.clone();
                c.run.algorithm = algorithm;
                next.push(c);
            }
        }
        cells = next;
    }
    if let Some(samplers) = &sweep.grid.sampler {
        let mut next = Vec::new();
        for cell in &cells {
            for &kind in samplers {
                let mut c = cell.clone();
                if kind == SamplerKind::Markov && cell.sampler.kind != SamplerKind::Markov {
                    return Err(Error::Config(
                        "markov sampler in grid needs a markov base with a transition matrix"
                            .into(),
                    ));
                }
                c.sampler.kind = kind;
                if kind != SamplerKind::Markov {
                    c.sampler.transition = None;
                    c.sampler.transition_file = None;
                }
                if kind != SamplerKind::CustomPattern {
                    c.sampler.pattern = None;
                }
                next.push(c);
            }
        }
        cells = next;
    }
    Ok(cells)
}

/// Execute every cell and summarize.
pub fn run_sweep(sweep: &SweepConfig, base_dir: &std::path::Path) -> Result<Vec<SweepRow>> {
    let cells = cell_configs(sweep)?;
    let mut rows = Vec::with_capacity(cells.len());
    for cell in &cells {
        cell.validate()?;
        let problem = cell.problem.build()?;
        let traces = execute_runs(cell, &problem, base_dir)?;
        let first = traces.first().expect("replications >= 1");
        let tau = first.resolved_tau;
        let alpha = first.resolved_alpha;
        let fits: Vec<RateFit> = traces
            .iter()
            .filter_map(|t| fit_linear_rate(t, tau))
            .collect();
        let fitted_exponent = if fits.is_empty() {
            None
        } else {
            Some(fits.iter().map(|f| f.exponent).sum::<f64>() / fits.len() as f64)
        };
        let fit_window = fits.first().map(|f| f.window);
        let kappa = problem.metadata().condition_number;
        let good = traces.iter().filter(|t| t.good_event_held).count();
        rows.push(SweepRow {
            algorithm: cell.run.algorithm.name().to_string(),
            sampler: first.sampler_kind.clone(),
            n: problem.n_components(),
            kappa,
            tau,
            alpha,
            iterations: cell.run.iterations,
            fitted_exponent,
            theory_exponent: kappa.map(|k| theory_exponent(k, tau)),
            prior_iag_exponent: kappa.map(|k| prior_iag_exponent(k, tau)),
            fit_window,
            final_r_mean: traces.iter().map(|t| t.final_r).sum::<f64>() / traces.len() as f64,
            good_event_frequency: good as f64 / traces.len() as f64,
            replications: traces.len(),
        });
    }
    Ok(rows)
}

/// Theory step-size compatibility: in theory mode the sweep's manual-τ cells
/// still resolve α as `1/(16Lτ)` through the normal resolution path.
pub fn parse_sweep(text: &str) -> Result<SweepConfig> {
    let sweep: SweepConfig =
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    sweep.base.validate()?;
    Ok(sweep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometric_fit_recovers_exact_rate() {
        let c = 3.7;
        let rho: f64 = 0.9931;
        let points = (50..400).map(|k| (k, c * rho.powi(k as i32)));
        let fit = fit_geometric(points).unwrap();
        assert!((fit.rho - rho).abs() < 1e-6, "rho = {}", fit.rho);
    }

    #[test]
    fn fit_ignores_nonpositive_values() {
        let points = vec![(1, 0.5), (2, 0.25), (3, 0.0), (4, -1.0), (5, 0.03125)];
        let fit = fit_geometric(points).unwrap();
        assert_eq!(fit.points, 3);
    }

    #[test]
    fn fit_needs_two_points() {
        assert!(fit_geometric(vec![(1, 0.5)]).is_none());
        assert!(fit_geometric(Vec::<(usize, f64)>::new()).is_none());
    }
}
