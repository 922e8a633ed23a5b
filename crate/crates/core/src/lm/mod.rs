//! Stepwise language-model interface.
//!
//! A [`LanguageModel`] maps a token prefix to a next-token distribution
//! ([`ProbStep`]). Backends may be dense (the full vocabulary is available,
//! as with [`TableMock`]) or sparse (only the entropy and the top-M tokens
//! are shipped, as with [`RemoteModel`]). Every decoder in this crate is
//! written against the trait so it can be exercised with scripted mocks.

mod mock;
mod remote;

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signals;

pub use mock::{MockModelFile, MockRule, TableMock};
pub use remote::{BridgeMeta, RemoteModel, StepRequest, StepResponse, TopEntry, BRIDGE_URL_ENV};

/// Tolerance on the total mass of a distribution handed to [`ProbStep::from_probs`].
pub const PROB_SUM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TokenId(pub u32);

impl TokenId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl From<u32> for TokenId {
    fn from(id: u32) -> Self {
        TokenId(id)
    }
}

impl fmt::Display for TokenId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Convenience for tests and fixtures.
pub fn tokens(ids: &[u32]) -> Vec<TokenId> {
    ids.iter().copied().map(TokenId).collect()
}

/// The model's next-token distribution at one decoding step.
///
/// `ranked` is sorted by descending probability with ties broken by lower
/// token id. Dense steps rank the entire vocabulary (zero-probability tokens
/// last); sparse steps rank only the tokens the backend returned.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbStep {
    vocab_size: usize,
    probs: Option<Vec<f64>>,
    entropy: f64,
    ranked: Vec<(TokenId, f64)>,
}

fn rank_order(a: (TokenId, f64), b: (TokenId, f64)) -> Ordering {
    b.1.partial_cmp(&a.1)
        .unwrap_or(Ordering::Equal)
        .then(a.0.cmp(&b.0))
}

impl ProbStep {
    /// Builds a dense step, validating the distribution and computing its entropy.
    pub fn from_probs(probs: Vec<f64>) -> Result<Self> {
        let entropy = signals::entropy(&probs)?;
        let mut by_prob: Vec<(TokenId, f64)> = probs
            .iter()
            .enumerate()
            .map(|(i, &p)| (TokenId(i as u32), p))
            .collect();
        by_prob.sort_by(|a, b| rank_order(*a, *b));
        let ranked = by_prob.into_iter().map(|(t, p)| (t, p.ln())).collect();
        Ok(Self {
            vocab_size: probs.len(),
            probs: Some(probs),
            entropy,
            ranked,
        })
    }

    /// Builds a sparse step from a backend that computed the full-distribution
    /// entropy itself and only shipped the head of the distribution.
    ///
    /// The entropy is taken as given; it is not recomputed from `top`.
    pub fn from_sparse(
        vocab_size: usize,
        entropy: f64,
        mut top: Vec<(TokenId, f64)>,
    ) -> Result<Self> {
        if !entropy.is_finite() || entropy < 0.0 {
            return Err(Error::Domain(format!(
                "entropy must be finite and non-negative, got {entropy}"
            )));
        }
        if top.is_empty() {
            return Err(Error::Domain("sparse step needs at least one token".into()));
        }
        for &(token, logprob) in &top {
            if token.index() >= vocab_size {
                return Err(Error::InvalidToken { token, vocab_size });
            }
            if logprob.is_nan() || logprob > 1e-9 {
                return Err(Error::Domain(format!(
                    "invalid log-probability {logprob} for token {token}"
                )));
            }
        }
        top.sort_by(|a, b| rank_order(*a, *b));
        Ok(Self {
            vocab_size,
            probs: None,
            entropy,
            ranked: top,
        })
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    /// Full distribution, when the backend is dense.
    pub fn probs(&self) -> Option<&[f64]> {
        self.probs.as_deref()
    }

    pub fn is_dense(&self) -> bool {
        self.probs.is_some()
    }

    /// Shannon entropy in nats.
    pub fn entropy(&self) -> f64 {
        self.entropy
    }

    pub fn ranked(&self) -> &[(TokenId, f64)] {
        &self.ranked
    }

    pub fn argmax(&self) -> TokenId {
        self.ranked[0].0
    }

    /// Log-probability of `token`; `None` for a sparse step that did not ship it.
    pub fn logprob(&self, token: TokenId) -> Option<f64> {
        match &self.probs {
            Some(p) => p.get(token.index()).map(|p| p.ln()),
            None => self
                .ranked
                .iter()
                .find(|(t, _)| *t == token)
                .map(|&(_, lp)| lp),
        }
    }

    /// Probabilities of the tokens in `ranked`, in ranked order.
    ///
    /// For sparse steps the head is renormalised, so sampling policies see a
    /// proper distribution over the shipped tokens.
    pub fn ranked_probs(&self) -> Vec<(TokenId, f64)> {
        let raw: Vec<(TokenId, f64)> = self.ranked.iter().map(|&(t, lp)| (t, lp.exp())).collect();
        if self.is_dense() {
            return raw;
        }
        let mass: f64 = raw.iter().map(|(_, p)| p).sum();
        raw.into_iter().map(|(t, p)| (t, p / mass)).collect()
    }
}

/// A backend producing next-token distributions.
///
/// Implementations must be shareable across threads: independent sessions
/// may query the same model concurrently.
pub trait LanguageModel: Send + Sync {
    fn vocab_size(&self) -> usize;

    fn eos_token(&self) -> Option<TokenId>;

    /// Maximum prefix length the backend accepts.
    fn context_limit(&self) -> usize;

    /// Distribution over the token following `prefix`.
    fn next_distribution(&self, prefix: &[TokenId]) -> Result<ProbStep>;

    fn model_id(&self) -> String {
        "unknown".to_string()
    }

    /// Surface text of a token, if the backend knows its vocabulary.
    fn token_text(&self, _token: TokenId) -> Option<String> {
        None
    }

    fn is_eos(&self, token: TokenId) -> bool {
        self.eos_token() == Some(token)
    }

    fn check_token(&self, token: TokenId) -> Result<()> {
        let vocab_size = self.vocab_size();
        if token.index() >= vocab_size {
            return Err(Error::InvalidToken { token, vocab_size });
        }
        Ok(())
    }
}

/// A conditioning prefix bound to a model.
///
/// Sessions are single-owner: [`LmSession::append`] consumes the session and
/// returns the extended one. Use [`Clone`] to fork a branch for lookahead.
#[derive(Clone)]
pub struct LmSession<'m> {
    model: &'m dyn LanguageModel,
    prefix: Vec<TokenId>,
}

impl fmt::Debug for LmSession<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LmSession")
            .field("model", &self.model.model_id())
            .field("prefix", &self.prefix)
            .finish()
    }
}

impl<'m> LmSession<'m> {
    pub fn new(model: &'m dyn LanguageModel, prompt: &[TokenId]) -> Result<Self> {
        for &t in prompt {
            model.check_token(t)?;
        }
        let limit = model.context_limit();
        if prompt.len() > limit {
            return Err(Error::Length {
                len: prompt.len(),
                limit,
            });
        }
        Ok(Self {
            model,
            prefix: prompt.to_vec(),
        })
    }

    pub fn model(&self) -> &'m dyn LanguageModel {
        self.model
    }

    pub fn prefix(&self) -> &[TokenId] {
        &self.prefix
    }

    pub fn len(&self) -> usize {
        self.prefix.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prefix.is_empty()
    }

    /// Whether one more token fits under the context limit.
    pub fn has_room(&self) -> bool {
        self.prefix.len() < self.model.context_limit()
    }

    /// Next-token distribution given the current prefix. Does not mutate the prefix.
    pub fn step(&self) -> Result<ProbStep> {
        if self.prefix.is_empty() {
            return Err(Error::Domain("cannot step an empty prefix".into()));
        }
        let limit = self.model.context_limit();
        if self.prefix.len() > limit {
            return Err(Error::Length {
                len: self.prefix.len(),
                limit,
            });
        }
        self.model.next_distribution(&self.prefix)
    }

    pub fn append(mut self, token: TokenId) -> Result<Self> {
        self.push(token)?;
        Ok(self)
    }

    pub fn push(&mut self, token: TokenId) -> Result<()> {
        self.model.check_token(token)?;
        let limit = self.model.context_limit();
        if self.prefix.len() + 1 > limit {
            return Err(Error::Length {
                len: self.prefix.len() + 1,
                limit,
            });
        }
        self.prefix.push(token);
        Ok(())
    }
}
