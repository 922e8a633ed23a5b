//! HTTP client for the logits bridge sidecar.
//!
//! Protocol: `GET /v1/meta` returns [`BridgeMeta`]; `POST /v1/step` takes a
//! [`StepRequest`] and returns a [`StepResponse`]. The server computes the
//! entropy over the full softmax, so the resulting [`ProbStep`] carries that
//! scalar unchanged together with the top-M head.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{LanguageModel, ProbStep, TokenId};
use crate::error::{Error, Result};

/// Environment variable holding the bridge base URL, e.g. `http://127.0.0.1:8000`.
pub const BRIDGE_URL_ENV: &str = "ADADEC_BRIDGE_URL";

pub const DEFAULT_TOP_M: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BridgeMeta {
    pub model_id: String,
    pub vocab_size: usize,
    pub eos_token: u32,
    pub context_limit: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRequest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tokens: Option<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    /// Ask the server to tokenize `text`.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub tokenize: bool,
    pub top_m: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopEntry {
    pub token: u32,
    pub logprob: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepResponse {
    pub entropy: f64,
    pub top: Vec<TopEntry>,
    pub eos_token: u32,
    pub vocab_size: usize,
}

impl StepResponse {
    pub fn into_prob_step(self) -> Result<ProbStep> {
        let top = self
            .top
            .into_iter()
            .map(|e| (TokenId(e.token), e.logprob))
            .collect();
        ProbStep::from_sparse(self.vocab_size, self.entropy, top)
    }
}

/// A [`LanguageModel`] served by the bridge. Stateless: the full prefix is
/// sent on every step.
pub struct RemoteModel {
    base_url: String,
    agent: ureq::Agent,
    meta: BridgeMeta,
    top_m: usize,
    token_texts: Option<Vec<String>>,
}

impl std::fmt::Debug for RemoteModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RemoteModel")
            .field("base_url", &self.base_url)
            .field("meta", &self.meta)
            .field("top_m", &self.top_m)
            .finish()
    }
}

fn map_http_error(err: ureq::Error, prefix_len: usize, limit: usize) -> Error {
    match err {
        ureq::Error::Status(code, resp) => {
            let body = resp.into_string().unwrap_or_default();
            if (400..500).contains(&code) && body.contains("context") {
                Error::Length {
                    len: prefix_len,
                    limit,
                }
            } else {
                Error::Backend(format!("bridge returned HTTP {code}: {body}"))
            }
        }
        ureq::Error::Transport(t) => Error::Backend(format!("bridge transport error: {t}")),
    }
}

impl RemoteModel {
    /// Connects to the bridge and fetches its metadata.
    pub fn connect(base_url: &str) -> Result<Self> {
        let agent = ureq::AgentBuilder::new()
            .timeout(Duration::from_secs(300))
            .build();
        let base_url = base_url.trim_end_matches('/').to_string();
        let meta: BridgeMeta = agent
            .get(&format!("{base_url}/v1/meta"))
            .call()
            .map_err(|e| map_http_error(e, 0, 0))?
            .into_json()
            .map_err(|e| Error::Backend(format!("malformed /v1/meta response: {e}")))?;
        if meta.vocab_size == 0 || meta.eos_token as usize >= meta.vocab_size {
            return Err(Error::Backend(format!(
                "inconsistent bridge metadata: {meta:?}"
            )));
        }
        Ok(Self {
            base_url,
            agent,
            meta,
            top_m: DEFAULT_TOP_M,
            token_texts: None,
        })
    }

    /// Connects to the URL in [`BRIDGE_URL_ENV`].
    pub fn from_env() -> Result<Self> {
        let url = std::env::var(BRIDGE_URL_ENV)
            .map_err(|_| Error::Config(format!("{BRIDGE_URL_ENV} is not set")))?;
        Self::connect(&url)
    }

    pub fn with_top_m(mut self, top_m: usize) -> Self {
        self.top_m = top_m.max(1);
        self
    }

    /// Attaches a vocabulary so generated tokens can be rendered as text.
    pub fn with_token_texts(mut self, texts: Vec<String>) -> Result<Self> {
        if texts.len() != self.meta.vocab_size {
            return Err(Error::Config(format!(
                "vocabulary file has {} entries, bridge vocab_size is {}",
                texts.len(),
                self.meta.vocab_size
            )));
        }
        self.token_texts = Some(texts);
        Ok(self)
    }

    pub fn meta(&self) -> &BridgeMeta {
        &self.meta
    }

    pub fn step_raw(&self, request: &StepRequest) -> Result<StepResponse> {
        let prefix_len = request.tokens.as_ref().map_or(0, Vec::len);
        self.agent
            .post(&format!("{}/v1/step", self.base_url))
            .send_json(request)
            .map_err(|e| map_http_error(e, prefix_len, self.meta.context_limit))?
            .into_json()
            .map_err(|e| Error::Backend(format!("malformed /v1/step response: {e}")))
    }
}

impl LanguageModel for RemoteModel {
    fn vocab_size(&self) -> usize {
        self.meta.vocab_size
    }

    fn eos_token(&self) -> Option<TokenId> {
        Some(TokenId(self.meta.eos_token))
    }

    fn context_limit(&self) -> usize {
        self.meta.context_limit
    }

    fn next_distribution(&self, prefix: &[TokenId]) -> Result<ProbStep> {
        let request = StepRequest {
            tokens: Some(prefix.iter().map(|t| t.0).collect()),
            text: None,
            tokenize: false,
            top_m: self.top_m,
        };
        self.step_raw(&request)?.into_prob_step()
    }

    fn model_id(&self) -> String {
        self.meta.model_id.clone()
    }

    fn token_text(&self, token: TokenId) -> Option<String> {
        self.token_texts.as_ref()?.get(token.index()).cloned()
    }
}
