//! Index-sequence generators for finite-sum methods.
//!
//! Three regimes: I.I.D. uniform sampling, a stationary ergodic Markov chain
//! over components (explicit finite transition matrix, initial state drawn
//! from π), and deterministic bounded-delay orders (plain cyclic or a custom
//! repeating pattern with a certified worst-case delay).

mod mixing;

pub use mixing::{analyze_mixing, stationary_distribution, validate_chain, MixingReport};

use crate::error::Error;
use crate::rng::replicate_rng;
use crate::Result;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Horizon for the mixing-time search when a Markov sampler is built.
pub const DEFAULT_MIXING_HORIZON: usize = 10_000;

/// Declarative sampler description (also the JSON config shape).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SamplerSpec {
    /// Uniform I.I.D. draws from `[N]`.
    IidUniform,
    /// Time-homogeneous chain over `[N]` with the given row-stochastic
    /// transition matrix. The initial state is drawn from the stationary
    /// distribution unless `start_state` pins it, which leaves the
    /// stationarity hypothesis of the Markov-sampling analysis.
    Markov {
        transition: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        start_state: Option<usize>,
    },
    /// Deterministic `0, 1, …, N−1` repeating.
    Cyclic,
    /// A finite index list repeated periodically.
    CustomPattern { pattern: Vec<usize> },
}

impl SamplerSpec {
    pub fn kind_name(&self) -> &'static str {
        match self {
            SamplerSpec::IidUniform => "iid_uniform",
            SamplerSpec::Markov { .. } => "markov",
            SamplerSpec::Cyclic => "cyclic",
            SamplerSpec::CustomPattern { .. } => "custom_pattern",
        }
    }
}

enum SamplerState {
    Iid,
    Markov {
        rows: Vec<Vec<f64>>,
        current: usize,
        started: bool,
    },
    Cyclic {
        cursor: usize,
    },
    Pattern {
        pattern: Vec<usize>,
        cursor: usize,
        certified: usize,
    },
}

/// A live index stream. Each run owns its sampler; nothing is shared.
pub struct Sampler {
    n: usize,
    rng: ChaCha8Rng,
    state: SamplerState,
    mixing: Option<MixingReport>,
    stationary_start: bool,
    seed: (u64, u64),
}

impl Sampler {
    /// Build a sampler for `n` components from a spec and a derived seed
    /// (`base_seed`, `replicate`).
    pub fn new(spec: &SamplerSpec, n: usize, base_seed: u64, replicate: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("sampler needs n >= 1".into()));
        }
        let mut rng = replicate_rng(base_seed, replicate);
        let (state, mixing, stationary_start) = match spec {
            SamplerSpec::IidUniform => (SamplerState::Iid, None, true),
            SamplerSpec::Markov {
                transition,
                start_state,
            } => {
                if transition.len() != n {
                    return Err(Error::InvalidArgument(format!(
                        "transition matrix is {}x{} but n = {n}",
                        transition.len(),
                        transition.first().map_or(0, |r| r.len()),
                    )));
                }
                let report = analyze_mixing(transition, DEFAULT_MIXING_HORIZON)?;
                let (current, stationary) = match start_state {
                    Some(s) => {
                        if *s >= n {
                            return Err(Error::InvalidArgument(format!(
                                "start_state {s} out of range"
                            )));
                        }
                        (*s, false)
                    }
                    None => (draw_categorical(&mut rng, &report.stationary), true),
                };
                (
                    SamplerState::Markov {
                        rows: transition.clone(),
                        current,
                        started: false,
                    },
                    Some(report),
                    stationary,
                )
            }
            SamplerSpec::Cyclic => (SamplerState::Cyclic { cursor: 0 }, None, true),
            SamplerSpec::CustomPattern { pattern } => {
                let certified = certified_delay(pattern, n)?;
                (
                    SamplerState::Pattern {
                        pattern: pattern.clone(),
                        cursor: 0,
                        certified,
                    },
                    None,
                    true,
                )
            }
        };
        Ok(Self {
            n,
            rng,
            state,
            mixing,
            stationary_start,
            seed: (base_seed, replicate),
        })
    }

    pub fn n_components(&self) -> usize {
        self.n
    }

    /// The `(base_seed, replicate)` pair this sampler was built from.
    pub fn seed(&self) -> (u64, u64) {
        self.seed
    }

    pub fn kind_name(&self) -> &'static str {
        match &self.state {
            SamplerState::Iid => "iid_uniform",
            SamplerState::Markov { .. } => "markov",
            SamplerState::Cyclic { .. } => "cyclic",
            SamplerState::Pattern { .. } => "custom_pattern",
        }
    }

    /// Mixing analysis (Markov samplers only).
    pub fn mixing(&self) -> Option<&MixingReport> {
        self.mixing.as_ref()
    }

    /// False when a Markov sampler was forced to a fixed start state.
    pub fn stationary_start(&self) -> bool {
        self.stationary_start
    }

    /// The deterministic worst-case delay, when one exists: `N` for cyclic,
    /// the certified window bound for custom patterns.
    pub fn certified_tau(&self) -> Option<usize> {
        match &self.state {
            SamplerState::Cyclic { .. } => Some(self.n),
            SamplerState::Pattern { certified, .. } => Some(*certified),
            _ => None,
        }
    }

    /// Emit the next index `i_k`.
    pub fn next_index(&mut self) -> usize {
        match &mut self.state {
            SamplerState::Iid => self.rng.random_range(0..self.n),
            SamplerState::Markov {
                rows,
                current,
                started,
            } => {
                if !*started {
                    *started = true;
                } else {
                    *current = draw_categorical(&mut self.rng, &rows[*current]);
                }
                *current
            }
            SamplerState::Cyclic { cursor } => {
                let v = *cursor;
                *cursor = (*cursor + 1) % self.n;
                v
            }
            SamplerState::Pattern {
                pattern, cursor, ..
            } => {
                let v = pattern[*cursor];
                *cursor = (*cursor + 1) % pattern.len();
                v
            }
        }
    }
}

fn draw_categorical(rng: &mut ChaCha8Rng, weights: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    weights.len() - 1
}

/// Smallest `τ` such that every component of `[n]` occurs in every window of
/// `τ` consecutive positions of the infinitely repeated `pattern`.
///
/// Equivalently, the largest gap between consecutive occurrences of any
/// component in the periodic stream (wrapping across the period boundary).
/// Errors if some component never appears.
pub fn certified_delay(pattern: &[usize], n: usize) -> Result<usize> {
    if pattern.is_empty() {
        return Err(Error::InvalidArgument("pattern must be nonempty".into()));
    }
    if let Some(bad) = pattern.iter().find(|i| **i >= n) {
        return Err(Error::InvalidArgument(format!(
            "pattern index {bad} out of range"
        )));
    }
    let period = pattern.len();
    let mut tau = 0usize;
    for component in 0..n {
        let occurrences: Vec<usize> = (0..period).filter(|k| pattern[*k] == component).collect();
        if occurrences.is_empty() {
            return Err(Error::UncoverablePattern { index: component });
        }
        let mut max_gap = period - occurrences[occurrences.len() - 1] + occurrences[0];
        for pair in occurrences.windows(2) {
            max_gap = max_gap.max(pair[1] - pair[0]);
        }
        tau = tau.max(max_gap);
    }
    Ok(tau)
}
