//! `vrgrad` — finite-sum optimization runs with verifiable convergence
//! bounds.
//!
//! Subcommands: `run` (execute an experiment, write CSV traces + metadata),
//! `verify` (inequality predicate suite; the builtin battery without
//! `--config`), `sweep` (parameter grids with empirical rate fits),
//! `staleness` (Monte Carlo concentration report), `mixing` (exact Markov
//! mixing analysis), `gradcheck` (finite-difference gradient validation).
//!
//! Exit codes: 0 success, 1 failed checks, 2 configuration errors,
//! 3 divergence.

use clap::{Parser, Subcommand};
use serde_json::json;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use vrgrad::concentration::{monte_carlo_staleness, MonteCarloOptions};
use vrgrad::harness::{
    acceptance::run_acceptance_suite, cli_run, cli_sweep, cli_verify, load_experiment, parse_sweep,
    ExperimentConfig, ProblemSpec,
};
use vrgrad::problems::check_gradients;
use vrgrad::samplers::{analyze_mixing, SamplerSpec};
use vrgrad::Error;

#[derive(Parser)]
#[command(
    name = "vrgrad",
    version,
    about = "Finite-sum optimization with verifiable convergence bounds"
)]
struct Cli {
    /// Configuration file (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for traces and reports.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Override the config's base seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Suppress stdout (files are still written).
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute one experiment config, one trace CSV per replication.
    Run,
    /// Run the inequality predicate suite. Without --config this is the
    /// builtin acceptance battery; with --config it verifies that experiment.
    Verify,
    /// Run a parameter sweep and summarize empirical vs theory rates.
    Sweep,
    /// Monte Carlo validation of the staleness concentration bounds.
    Staleness {
        #[arg(long, value_parser = ["iid", "markov"])]
        regime: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = 1000)]
        reps: usize,
        /// Window override; defaults to the regime's closed-form bound.
        #[arg(long)]
        tau: Option<usize>,
        /// Transition matrix JSON file (markov regime).
        #[arg(long)]
        transition: Option<PathBuf>,
    },
    /// Exact mixing analysis of a transition matrix JSON file.
    Mixing {
        #[arg(long)]
        transition: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        k_max: usize,
    },
    /// Finite-difference gradient validation of a problem spec.
    Gradcheck {
        #[arg(long, default_value_t = 100)]
        trials: usize,
    },
}

fn exit_for(err: &Error) -> ExitCode {
    match err {
        Error::Config(_) | Error::InvalidArgument(_) => ExitCode::from(2),
        Error::Divergence { .. } => ExitCode::from(3),
        _ => ExitCode::from(1),
    }
}

fn load_config(cli: &Cli) -> Result<(ExperimentConfig, PathBuf), Error> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::Config("this subcommand needs --config <file>".into()))?;
    let mut config = load_experiment(path)?;
    if let Some(seed) = cli.seed {
        config.base_seed = seed;
    }
    let base_dir = path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    Ok((config, base_dir))
}

fn out_dir(cli: &Cli, config: Option<&ExperimentConfig>) -> PathBuf {
    if cli.out != Path::new("out") {
        return cli.out.clone();
    }
    config
        .and_then(|c| c.out_dir.clone())
        .unwrap_or_else(|| cli.out.clone())
}

fn read_transition(path: &Path) -> Result<Vec<Vec<f64>>, Error> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn command_main(cli: &Cli) -> Result<ExitCode, Error> {
    match &cli.command {
        Command::Run => {
            let (config, base_dir) = load_config(cli)?;
            let out = out_dir(cli, Some(&config));
            let summary = cli_run(&config, &base_dir, &out)?;
            if !cli.quiet {
                println!(
                    "wrote {} trace file(s) and metadata.json to {} (alpha={}, tau={})",
                    summary.trace_files.len(),
                    out.display(),
                    summary.resolved_alpha,
                    summary.resolved_tau
                );
                for rep in &summary.replications {
                    println!(
                        "  replicate {:>3}: final r = {:.6e}, max staleness = {}, good event = {}",
                        rep.replicate, rep.final_r, rep.max_staleness, rep.good_event_held
                    );
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify => {
            if cli.config.is_some() {
                let (config, base_dir) = load_config(cli)?;
                let out = out_dir(cli, Some(&config));
                let report = cli_verify(&config, &base_dir, &out)?;
                if !cli.quiet {
                    for (name, verdict) in &report.checks {
                        println!(
                            "check {:<20} {}  (checked {}, min margin {:.3e}{})",
                            name,
                            if verdict.passed { "PASS" } else { "FAIL" },
                            verdict.checked,
                            verdict.margin_min,
                            verdict
                                .first_violation_k
                                .map_or(String::new(), |k| format!(", first violation k={k}")),
                        );
                    }
                    println!(
                        "good event: {}/{} replications (delta = {}), conditioning = {}",
                        report.good_event.good,
                        report.good_event.replications,
                        report.good_event.delta,
                        report.conditioning
                    );
                }
                return Ok(if report.passed {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::FAILURE
                });
            }
            let results = run_acceptance_suite();
            let mut all = true;
            for c in &results {
                all &= c.passed;
                if !cli.quiet {
                    println!(
                        "criterion {:>2} {:<42} {}  [{}]",
                        c.id,
                        c.name,
                        if c.passed { "PASS" } else { "FAIL" },
                        c.detail
                    );
                }
            }
            std::fs::create_dir_all(&cli.out)?;
            let report = json!({
                "schema_version": vrgrad::SCHEMA_VERSION,
                "criteria": results,
                "passed": all,
            });
            std::fs::write(
                cli.out.join("acceptance_report.json"),
                serde_json::to_string_pretty(&report).expect("report serializes") + "\n",
            )?;
            Ok(if all {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        Command::Sweep => {
            let path = cli
                .config
                .as_ref()
                .ok_or_else(|| Error::Config("sweep needs --config <file>".into()))?;
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
            let mut sweep = parse_sweep(&text)?;
            if let Some(seed) = cli.seed {
                sweep.base.base_seed = seed;
            }
            let base_dir = path
                .parent()
                .map(Path::to_path_buf)
                .unwrap_or_else(|| PathBuf::from("."));
            let out = out_dir(cli, Some(&sweep.base));
            let rows = cli_sweep(&sweep, &base_dir, &out)?;
            if !cli.quiet {
                println!(
                    "{} sweep cell(s) -> {}/sweep_summary.csv",
                    rows.len(),
                    out.display()
                );
                for row in &rows {
                    println!(
                        "  {} {} n={} tau={} fitted={:?} theory={:?}",
                        row.algorithm,
                        row.sampler,
                        row.n,
                        row.tau,
                        row.fitted_exponent,
                        row.theory_exponent
                    );
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Staleness {
            regime,
            n,
            k,
            delta,
            reps,
            tau,
            transition,
        } => {
            let spec = match regime.as_str() {
                "markov" => {
                    let path = transition.as_ref().ok_or_else(|| {
                        Error::Config("markov regime needs --transition <file>".into())
                    })?;
                    SamplerSpec::Markov {
                        transition: read_transition(path)?,
                        start_state: None,
                    }
                }
                _ => SamplerSpec::IidUniform,
            };
            let report = monte_carlo_staleness(
                &spec,
                &MonteCarloOptions {
                    n: *n,
                    horizon: *k,
                    delta: *delta,
                    tau: *tau,
                    replications: *reps,
                    base_seed: cli.seed.unwrap_or(0),
                    window_grid: None,
                },
            )?;
            let text = serde_json::to_string_pretty(&report).expect("report serializes");
            if !cli.quiet {
                println!("{text}");
            }
            std::fs::create_dir_all(&cli.out)?;
            std::fs::write(cli.out.join("staleness_report.json"), text + "\n")?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Mixing { transition, k_max } => {
            let rows = read_transition(transition)?;
            let report = analyze_mixing(&rows, *k_max)?;
            let wrapped = json!({
                "schema_version": vrgrad::SCHEMA_VERSION,
                "mixing": report,
            });
            let text = serde_json::to_string_pretty(&wrapped).expect("report serializes");
            if !cli.quiet {
                println!("{text}");
            }
            std::fs::create_dir_all(&cli.out)?;
            std::fs::write(cli.out.join("mixing_report.json"), text + "\n")?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Gradcheck { trials } => {
            let path = cli
                .config
                .as_ref()
                .ok_or_else(|| Error::Config("gradcheck needs --config <file>".into()))?;
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
            // Accept either a bare problem spec or a full experiment config.
            let value: serde_json::Value =
                serde_json::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
            let spec: ProblemSpec = if value.get("family").is_some() {
                serde_json::from_value(value).map_err(|e| Error::Config(e.to_string()))?
            } else {
                let config: ExperimentConfig =
                    serde_json::from_value(value).map_err(|e| Error::Config(e.to_string()))?;
                config.problem
            };
            let problem = spec.build()?;
            let report = check_gradients(&problem, *trials, cli.seed.unwrap_or(0));
            let wrapped = json!({
                "schema_version": vrgrad::SCHEMA_VERSION,
                "gradcheck": report,
            });
            let text = serde_json::to_string_pretty(&wrapped).expect("report serializes");
            if !cli.quiet {
                println!("{text}");
            }
            std::fs::create_dir_all(&cli.out)?;
            std::fs::write(cli.out.join("gradcheck_report.json"), text + "\n")?;
            Ok(if report.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match command_main(&cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            exit_for(&err)
        }
    }
}
