//! Experiment orchestration: JSON-configured runs, verification suites,
//! parameter sweeps, and flat-file outputs (CSV traces, JSON reports).

pub mod acceptance;
mod config;
mod sweep;
mod verify;

pub use config::{
    load_experiment, parse_experiment, ExperimentConfig, ProblemSpec, SamplerConfig, SamplerKind,
};
pub use sweep::{
    fit_geometric, fit_linear_rate, parse_sweep, run_sweep, write_sweep_csv, RateFit, SweepConfig,
    SweepGrid, SweepRow, SWEEP_CSV_HEADER,
};
pub use verify::{
    evaluate_traces, verify_experiment, CheckVerdict, GoodEventSummary, VerifyReport,
};

use crate::diagnostics::{prior_iag_exponent, theory_exponent};
use crate::error::Error;
use crate::optimizers::{run, RunTrace};
use crate::problems::FiniteSumProblem;
use crate::samplers::Sampler;
use crate::Result;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use std::path::Path;

/// Execute every replication of an experiment. Replications run in parallel
/// with independently derived seeds and are returned in replicate order.
pub fn execute_runs(
    config: &ExperimentConfig,
    problem: &FiniteSumProblem,
    base_dir: &Path,
) -> Result<Vec<RunTrace>> {
    config.validate()?;
    let spec = config.sampler.to_spec(base_dir)?;
    let seed = config.sampler_seed();
    (0..config.replications)
        .into_par_iter()
        .map(|rep| {
            let mut sampler = Sampler::new(&spec, problem.n_components(), seed, rep as u64)?;
            run(problem, &mut sampler, &config.run)
        })
        .collect()
}

/// Per-replication summary entry of the run metadata JSON.
#[derive(Debug, Clone, Serialize)]
pub struct ReplicationSummary {
    pub replicate: u64,
    pub good_event_held: bool,
    pub max_staleness: usize,
    pub final_r: f64,
    pub rows: usize,
}

/// Outcome of [`cli_run`]: file names written plus the in-memory summaries.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub schema_version: u32,
    pub resolved_alpha: f64,
    pub resolved_tau: usize,
    pub rng: String,
    pub replications: Vec<ReplicationSummary>,
    pub trace_files: Vec<String>,
}

fn metadata_json(
    config: &ExperimentConfig,
    problem: &FiniteSumProblem,
    summary: &RunSummary,
) -> serde_json::Value {
    let m = problem.metadata();
    let tau = summary.resolved_tau;
    let theory = m.condition_number.map(|kappa| {
        json!({
            "envelope_prefactor": 6.0 * m.smoothness * m.radius_b * m.radius_b,
            "theory_exponent": theory_exponent(kappa, tau),
            "prior_iag_exponent": prior_iag_exponent(kappa, tau),
        })
    });
    json!({
        "schema_version": crate::SCHEMA_VERSION,
        "config": config,
        "resolved": {"alpha": summary.resolved_alpha, "tau": tau},
        "rng": summary.rng,
        "problem_metadata": {
            "smoothness": m.smoothness,
            "strong_convexity": m.strong_convexity,
            "condition_number": m.condition_number,
            "radius_b": m.radius_b,
            "optimal_value": m.optimal_value,
        },
        "theory": theory,
        "replications": summary.replications,
        "trace_files": summary.trace_files,
    })
}

/// Run an experiment and write `trace_rep{i}.csv` per replication plus a
/// `metadata.json`, all under `out_dir`.
pub fn cli_run(config: &ExperimentConfig, base_dir: &Path, out_dir: &Path) -> Result<RunSummary> {
    let problem = config.problem.build()?;
    let traces = execute_runs(config, &problem, base_dir)?;
    std::fs::create_dir_all(out_dir)?;

    let first = traces.first().expect("replications >= 1");
    let mut summary = RunSummary {
        schema_version: crate::SCHEMA_VERSION,
        resolved_alpha: first.resolved_alpha,
        resolved_tau: first.resolved_tau,
        rng: first.rng.to_string(),
        replications: Vec::with_capacity(traces.len()),
        trace_files: Vec::new(),
    };
    for trace in &traces {
        summary.replications.push(ReplicationSummary {
            replicate: trace.replicate,
            good_event_held: trace.good_event_held,
            max_staleness: trace.max_staleness_overall,
            final_r: trace.final_r,
            rows: trace.rows.len(),
        });
        if config.run.record_trace {
            let name = format!("trace_rep{:03}.csv", trace.replicate);
            let file = std::fs::File::create(out_dir.join(&name))?;
            trace.write_csv(std::io::BufWriter::new(file))?;
            summary.trace_files.push(name);
        }
    }
    let metadata = metadata_json(config, &problem, &summary);
    std::fs::write(
        out_dir.join("metadata.json"),
        serde_json::to_string_pretty(&metadata).expect("metadata serializes") + "\n",
    )?;
    Ok(summary)
}

/// Verify an experiment config and write `verify_report.json` under
/// `out_dir`.
pub fn cli_verify(
    config: &ExperimentConfig,
    base_dir: &Path,
    out_dir: &Path,
) -> Result<VerifyReport> {
    let report = verify_experiment(config, base_dir)?;
    std::fs::create_dir_all(out_dir)?;
    std::fs::write(
        out_dir.join("verify_report.json"),
        serde_json::to_string_pretty(&report).expect("report serializes") + "\n",
    )?;
    Ok(report)
}

/// Run a sweep and write `sweep_summary.csv` under `out_dir`.
pub fn cli_sweep(sweep: &SweepConfig, base_dir: &Path, out_dir: &Path) -> Result<Vec<SweepRow>> {
    let rows = run_sweep(sweep, base_dir)?;
    std::fs::create_dir_all(out_dir)?;
    let file = std::fs::File::create(out_dir.join("sweep_summary.csv"))?;
    write_sweep_csv(&rows, std::io::BufWriter::new(file)).map_err(Error::Io)?;
    Ok(rows)
}
