//! JSON experiment configuration.
//!
//! Configs are schema-validated before any computation: unknown keys are
//! rejected, cross-field requirements (a transition matrix for Markov
//! samplers, a pattern for custom orders, manual values for manual modes) are
//! checked up front, and parse errors carry the line/column of the offending
//! token.

use crate::error::Error;
use crate::optimizers::RunConfig;
use crate::problems::{make_logistic, make_nonconvex, make_quadratic, FiniteSumProblem};
use crate::samplers::SamplerSpec;
use crate::Result;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Builtin problem description (the `problem` object of a config).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemSpec {
    Quadratic {
        n: usize,
        d: usize,
        kappa: f64,
        seed: u64,
    },
    Logistic {
        n: usize,
        d: usize,
        l2: f64,
        seed: u64,
    },
    Nonconvex {
        n: usize,
        d: usize,
        seed: u64,
    },
}

impl ProblemSpec {
    pub fn n_components(&self) -> usize {
        match self {
            ProblemSpec::Quadratic { n, .. }
            | ProblemSpec::Logistic { n, .. }
            | ProblemSpec::Nonconvex { n, .. } => *n,
        }
    }

    pub fn build(&self) -> Result<FiniteSumProblem> {
        match *self {
            ProblemSpec::Quadratic { n, d, kappa, seed } => make_quadratic(n, d, kappa, seed),
            ProblemSpec::Logistic { n, d, l2, seed } => make_logistic(n, d, l2, seed),
            ProblemSpec::Nonconvex { n, d, seed } => make_nonconvex(n, d, seed),
        }
    }
}

/// Sampler description (the `sampler` object of a config). Markov transition
/// matrices come inline or from a standalone JSON file of rows.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerConfig {
    pub kind: SamplerKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transition: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transition_file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pattern: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start_state: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerKind {
    IidUniform,
    Markov,
    Cyclic,
    CustomPattern,
}

impl SamplerConfig {
    pub fn iid() -> Self {
        Self {
            kind: SamplerKind::IidUniform,
            transition: None,
            transition_file: None,
            pattern: None,
            start_state: None,
            seed: None,
        }
    }

    /// Resolve to a [`SamplerSpec`], loading a transition file relative to
    /// `base_dir` when needed.
    pub fn to_spec(&self, base_dir: &Path) -> Result<SamplerSpec> {
        match self.kind {
            SamplerKind::IidUniform | SamplerKind::Cyclic => {
                if self.transition.is_some() || self.transition_file.is_some() {
                    return Err(Error::Config(
                        "transition matrix given for a non-markov sampler".into(),
                    ));
                }
                if self.pattern.is_some() {
                    return Err(Error::Config(
                        "pattern given for a non-pattern sampler".into(),
                    ));
                }
                Ok(match self.kind {
                    SamplerKind::IidUniform => SamplerSpec::IidUniform,
                    _ => SamplerSpec::Cyclic,
                })
            }
            SamplerKind::Markov => {
                let transition = match (&self.transition, &self.transition_file) {
                    (Some(rows), None) => rows.clone(),
                    (None, Some(file)) => {
                        let path = if file.is_absolute() {
                            file.clone()
                        } else {
                            base_dir.join(file)
                        };
                        let text = std::fs::read_to_string(&path).map_err(|e| {
                            Error::Config(format!("cannot read {}: {e}", path.display()))
                        })?;
                        serde_json::from_str(&text)
                            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
                    }
                    (Some(_), Some(_)) => {
                        return Err(Error::Config(
                            "give either transition or transition_file, not both".into(),
                        ))
                    }
                    (None, None) => {
                        return Err(Error::Config(
                            "markov sampler needs a transition matrix".into(),
                        ))
                    }
                };
                Ok(SamplerSpec::Markov {
                    transition,
                    start_state: self.start_state,
                })
            }
            SamplerKind::CustomPattern => {
                let pattern = self.pattern.clone().ok_or_else(|| {
                    Error::Config("custom_pattern sampler needs a pattern".into())
                })?;
                Ok(SamplerSpec::CustomPattern { pattern })
            }
        }
    }
}

/// One experiment: a problem, a sampler, a run configuration, and replication
/// bookkeeping.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_schema_version")]
    pub schema_version: u32,
    pub problem: ProblemSpec,
    pub sampler: SamplerConfig,
    pub run: RunConfig,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
}

fn default_schema_version() -> u32 {
    crate::SCHEMA_VERSION
}

fn default_replications() -> usize {
    1
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != crate::SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported schema_version {} (expected {})",
                self.schema_version,
                crate::SCHEMA_VERSION
            )));
        }
        if self.replications == 0 {
            return Err(Error::Config("replications must be >= 1".into()));
        }
        self.run
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }

    /// Seed base for sampler streams: the sampler's own seed when given,
    /// otherwise the experiment base seed.
    pub fn sampler_seed(&self) -> u64 {
        self.sampler.seed.unwrap_or(self.base_seed)
    }
}

/// Parse an experiment config from JSON text. Errors carry line/column.
pub fn parse_experiment(text: &str) -> Result<ExperimentConfig> {
    let config: ExperimentConfig =
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    config.validate()?;
    Ok(config)
}

/// Load an experiment config from a file.
pub fn load_experiment(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_experiment(&text).map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "problem": {"family": "quadratic", "n": 4, "d": 2, "kappa": 2.0, "seed": 1},
        "sampler": {"kind": "iid_uniform"},
        "run": {
            "algorithm": "sag",
            "step_size_mode": "theory",
            "tau_mode": "theory",
            "iterations": 100,
            "delta": 0.1
        },
        "replications": 2,
        "base_seed": 42
    }"#;

    #[test]
    fn minimal_config_parses() {
        let config = parse_experiment(MINIMAL).unwrap();
        assert_eq!(config.replications, 2);
        assert_eq!(config.problem.n_components(), 4);
        assert_eq!(config.schema_version, crate::SCHEMA_VERSION);
        config.problem.build().unwrap();
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = MINIMAL.replace("\"base_seed\": 42", "\"base_seed\": 42, \"mystery\": 1");
        match parse_experiment(&text) {
            Err(Error::Config(msg)) => assert!(msg.contains("mystery"), "{msg}"),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_algorithm_rejected_with_location() {
        let text = MINIMAL.replace("\"sag\"", "\"sagb\"");
        match parse_experiment(&text) {
            Err(Error::Config(msg)) => {
                assert!(msg.contains("line"), "{msg}");
            }
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn markov_requires_transition() {
        let config = SamplerConfig {
            kind: SamplerKind::Markov,
            ..SamplerConfig::iid()
        };
        assert!(matches!(
            config.to_spec(Path::new(".")),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn transition_file_loads_relative() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("chain.json"), "[[0.9, 0.1], [0.1, 0.9]]").unwrap();
        let config = SamplerConfig {
            kind: SamplerKind::Markov,
            transition_file: Some(PathBuf::from("chain.json")),
            ..SamplerConfig::iid()
        };
        match config.to_spec(dir.path()).unwrap() {
            SamplerSpec::Markov { transition, .. } => assert_eq!(transition[0][0], 0.9),
            other => panic!("unexpected spec {other:?}"),
        }
    }

    #[test]
    fn cross_field_misuse_rejected() {
        let config = SamplerConfig {
            kind: SamplerKind::Cyclic,
            pattern: Some(vec![0, 1]),
            ..SamplerConfig::iid()
        };
        assert!(matches!(
            config.to_spec(Path::new(".")),
            Err(Error::Config(_))
        ));
    }
}
