//! Decoding policies.
//!
//! Baselines ([`decode_greedy`], [`decode_sampling`], [`decode_beam`],
//! [`decode_adapt`]) and the entropy-triggered pause-then-rerank loop
//! ([`decode_adadec`]). All of them return a [`GenerationResult`] whose step
//! log records the entropy seen at every emitted token.

mod beam;
mod lookahead;
mod sampling;

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::lm::{LanguageModel, LmSession, TokenId};
use crate::threshold::ThresholdModel;

pub use beam::decode_beam;
pub use lookahead::{decode_adadec, lookahead_score};
pub use sampling::{
    decode_adapt, decode_sampling, policy_distribution, sample_index, ADAPT_A, ADAPT_B,
};

pub const DEFAULT_LOOKAHEAD_WIDTH: usize = 3;
pub const DEFAULT_LOOKAHEAD_LEN: usize = 5;
pub const DEFAULT_MAX_LEN: usize = 1024;

/// Policy used at steps that do not pause.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BasePolicy {
    Greedy,
    Temperature { temperature: f64 },
    TopK { k: usize, temperature: f64 },
    TopP { p: f64, temperature: f64 },
}

impl BasePolicy {
    pub fn is_stochastic(&self) -> bool {
        !matches!(self, BasePolicy::Greedy)
    }

    fn validate(&self) -> Result<()> {
        let temperature = match *self {
            BasePolicy::Greedy => return Ok(()),
            BasePolicy::Temperature { temperature } => temperature,
            BasePolicy::TopK { k, temperature } => {
                if k == 0 {
                    return Err(Error::Config("top-k needs k >= 1".into()));
                }
                temperature
            }
            BasePolicy::TopP { p, temperature } => {
                if !(p > 0.0 && p <= 1.0) {
                    return Err(Error::Config(format!("top-p needs p in (0, 1], got {p}")));
                }
                temperature
            }
        };
        if !(temperature > 0.0 && temperature.is_finite()) {
            return Err(Error::Config(format!(
                "temperature must be positive, got {temperature}"
            )));
        }
        Ok(())
    }
}

/// Where the pause threshold comes from.
///
/// Serialised as a number for a fixed threshold, or one of the strings
/// `"learned"`, `"never-pause"`, `"always-pause"`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum TauSetting {
    /// Use the threshold model's learned tau.
    #[default]
    Learned,
    Fixed(f64),
    NeverPause,
    AlwaysPause,
}

impl TauSetting {
    /// Threshold value; sentinels map to `±inf`.
    pub fn resolve(&self, threshold: Option<&ThresholdModel>) -> Result<f64> {
        match *self {
            TauSetting::Learned => threshold.map(|t| t.tau).ok_or_else(|| {
                Error::Config("learned tau requested but no threshold model given".into())
            }),
            TauSetting::Fixed(t) if t.is_nan() => Err(Error::Config("tau is NaN".into())),
            TauSetting::Fixed(t) => Ok(t),
            TauSetting::NeverPause => Ok(f64::INFINITY),
            TauSetting::AlwaysPause => Ok(f64::NEG_INFINITY),
        }
    }

    /// Threshold at a fixed value, mapping infinities back to the sentinels.
    pub fn from_value(tau: f64) -> Self {
        if tau == f64::INFINITY {
            TauSetting::NeverPause
        } else if tau == f64::NEG_INFINITY {
            TauSetting::AlwaysPause
        } else {
            TauSetting::Fixed(tau)
        }
    }
}

impl fmt::Display for TauSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TauSetting::Learned => f.write_str("learned"),
            TauSetting::Fixed(t) => write!(f, "{t}"),
            TauSetting::NeverPause => f.write_str("never-pause"),
            TauSetting::AlwaysPause => f.write_str("always-pause"),
        }
    }
}

impl FromStr for TauSetting {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "learned" => Ok(TauSetting::Learned),
            "never-pause" | "inf" | "+inf" => Ok(TauSetting::NeverPause),
            "always-pause" | "-inf" => Ok(TauSetting::AlwaysPause),
            _ => s.parse::<f64>().map(TauSetting::from_value).map_err(|_| {
                format!("expected a number, learned, never-pause or always-pause; got {s:?}")
            }),
        }
    }
}

impl Serialize for TauSetting {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            TauSetting::Fixed(t) => s.serialize_f64(*t),
            other => s.serialize_str(&other.to_string()),
        }
    }
}

impl<'de> Deserialize<'de> for TauSetting {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Number(f64),
            Name(String),
        }
        match Repr::deserialize(d)? {
            Repr::Number(t) => Ok(TauSetting::Fixed(t)),
            Repr::Name(name) => name.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodeConfig {
    pub base_policy: BasePolicy,
    pub tau: TauSetting,
    /// Candidates reranked at a paused step.
    pub lookahead_width: usize,
    /// Greedy continuation tokens simulated per candidate.
    pub lookahead_len: usize,
    pub max_len: usize,
    pub seed: u64,
    /// Run the rollouts of one pause on scoped threads.
    #[serde(default)]
    pub parallel_lookahead: bool,
}

impl Default for DecodeConfig {
    fn default() -> Self {
        Self {
            base_policy: BasePolicy::Greedy,
            tau: TauSetting::Learned,
            lookahead_width: DEFAULT_LOOKAHEAD_WIDTH,
            lookahead_len: DEFAULT_LOOKAHEAD_LEN,
            max_len: DEFAULT_MAX_LEN,
            seed: 0,
            parallel_lookahead: false,
        }
    }
}

impl DecodeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lookahead_width == 0 {
            return Err(Error::Config("lookahead width must be at least 1".into()));
        }
        if self.max_len == 0 {
            return Err(Error::Config("max_len must be at least 1".into()));
        }
        self.base_policy.validate()
    }
}

/// A candidate token followed by its greedy continuation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub first: TokenId,
    pub first_logprob: f64,
    pub continuation: Vec<TokenId>,
    pub continuation_logprobs: Vec<f64>,
    /// Mean log-probability over `first` and `continuation`.
    pub score: f64,
}

impl Trajectory {
    pub fn recompute_score(&self) -> f64 {
        let total: f64 = self.first_logprob + self.continuation_logprobs.iter().sum::<f64>();
        total / (1 + self.continuation_logprobs.len()) as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub idx: usize,
    pub entropy: f64,
    pub paused: bool,
    pub chosen: TokenId,
    /// Scored candidates, present only at paused steps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidates: Option<Vec<Trajectory>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FinishReason {
    Eos,
    MaxLen,
    /// The backend's context window filled before EOS or `max_len`.
    ContextLimit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationResult {
    pub tokens: Vec<TokenId>,
    pub step_log: Vec<StepRecord>,
    pub finished_reason: FinishReason,
}

impl GenerationResult {
    pub fn pauses(&self) -> usize {
        self.step_log.iter().filter(|s| s.paused).count()
    }

    /// Paused steps over total steps; zero for an empty generation.
    pub fn pause_rate(&self) -> f64 {
        if self.step_log.is_empty() {
            0.0
        } else {
            self.pauses() as f64 / self.step_log.len() as f64
        }
    }

    /// One JSON object per step:
    /// `{idx, entropy, paused, chosen, candidates?: [{token, logprob, score, cont_len}]}`.
    pub fn write_step_log_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        #[derive(Serialize)]
        struct Candidate {
            token: TokenId,
            logprob: f64,
            score: f64,
            cont_len: usize,
        }
        #[derive(Serialize)]
        struct Line {
            idx: usize,
            entropy: f64,
            paused: bool,
            chosen: TokenId,
            #[serde(skip_serializing_if = "Option::is_none")]
            candidates: Option<Vec<Candidate>>,
        }
        for s in &self.step_log {
            let line = Line {
                idx: s.idx,
                entropy: s.entropy,
                paused: s.paused,
                chosen: s.chosen,
                candidates: s.candidates.as_ref().map(|c| {
                    c.iter()
                        .map(|t| Candidate {
                            token: t.first,
                            logprob: t.first_logprob,
                            score: t.score,
                            cont_len: t.continuation.len(),
                        })
                        .collect()
                }),
            };
            serde_json::to_writer(&mut w, &line)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// Which decoder a run uses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Strategy {
    Greedy,
    /// Stochastic decoding with the config's base policy.
    Sampling,
    Beam {
        width: usize,
    },
    Adapt {
        a: f64,
        b: f64,
    },
    Adadec,
}

/// Runs `strategy` on `prompt`.
pub fn generate(
    model: &dyn LanguageModel,
    prompt: &[TokenId],
    strategy: Strategy,
    config: &DecodeConfig,
    threshold: Option<&ThresholdModel>,
) -> Result<GenerationResult> {
    match strategy {
        Strategy::Greedy => decode_greedy(model, prompt, config.max_len),
        Strategy::Sampling => decode_sampling(model, prompt, config),
        Strategy::Beam { width } => decode_beam(model, prompt, width, config.max_len),
        Strategy::Adapt { a, b } => decode_adapt(model, prompt, config, a, b, &|t| {
            crate::signals::ends_line(model, t)
        }),
        Strategy::Adadec => decode_adadec(model, prompt, config, threshold),
    }
}

/// Drives a single-path decoder: `choose` picks the token at each step.
pub(crate) fn run_stepwise<F>(
    model: &dyn LanguageModel,
    prompt: &[TokenId],
    max_len: usize,
    mut choose: F,
) -> Result<GenerationResult>
where
    F: FnMut(
        usize,
        &LmSession<'_>,
        &crate::lm::ProbStep,
    ) -> Result<(TokenId, Option<Vec<Trajectory>>)>,
{
    if max_len == 0 {
        return Err(Error::Config("max_len must be at least 1".into()));
    }
    let mut session = LmSession::new(model, prompt)?;
    let mut tokens = Vec::new();
    let mut step_log = Vec::new();
    let mut finished_reason = FinishReason::MaxLen;
    for idx in 0..max_len {
        let step = session.step()?;
        let (chosen, candidates) = choose(idx, &session, &step)?;
        step_log.push(StepRecord {
            idx,
            entropy: step.entropy(),
            paused: candidates.is_some(),
            chosen,
            candidates,
        });
        tokens.push(chosen);
        if model.is_eos(chosen) {
            finished_reason = FinishReason::Eos;
            break;
        }
        if idx + 1 == max_len {
            break;
        }
        if !session.has_room() {
            finished_reason = FinishReason::ContextLimit;
            break;
        }
        session.push(chosen)?;
    }
    Ok(GenerationResult {
        tokens,
        step_log,
        finished_reason,
    })
}

/// Highest-probability token at every step (ties to the lower id).
pub fn decode_greedy(
    model: &dyn LanguageModel,
    prompt: &[TokenId],
    max_len: usize,
) -> Result<GenerationResult> {
    run_stepwise(model, prompt, max_len, |_, _, step| {
        Ok((step.argmax(), None))
    })
}
