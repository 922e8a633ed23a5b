use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{LanguageModel, ProbStep, TokenId};
use crate::error::{Error, Result};

const MOCK_SUM_TOLERANCE: f64 = 1e-9;
const DEFAULT_CONTEXT_LIMIT: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MockRule {
    pub suffix: Vec<TokenId>,
    pub probs: Vec<f64>,
}

/// On-disk form of a [`TableMock`].
///
/// `context_limit`, `token_texts` and `model_id` are optional extensions;
/// files carrying only `vocab_size`, `eos_token`, `rules` and `default`
/// load unchanged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MockModelFile {
    pub vocab_size: usize,
    pub eos_token: Option<TokenId>,
    pub rules: Vec<MockRule>,
    pub default: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context_limit: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub token_texts: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_id: Option<String>,
}

/// Deterministic scripted model.
///
/// The rule whose suffix is the longest suffix of the prefix wins; among
/// equally long matches the earliest inserted rule wins. Unmatched prefixes
/// yield the default distribution.
#[derive(Debug, Clone)]
pub struct TableMock {
    vocab_size: usize,
    eos_token: Option<TokenId>,
    context_limit: usize,
    rules: Vec<MockRule>,
    compiled: Vec<ProbStep>,
    default: Vec<f64>,
    default_step: ProbStep,
    token_texts: Option<Vec<String>>,
    model_id: String,
}

fn check_vector(probs: &[f64], vocab_size: usize, what: &str) -> Result<()> {
    if probs.len() != vocab_size {
        return Err(Error::MockModel(format!(
            "{what} has {} entries, expected vocab_size {vocab_size}",
            probs.len()
        )));
    }
    if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
        return Err(Error::MockModel(format!(
            "{what} has invalid probability {p}"
        )));
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > MOCK_SUM_TOLERANCE {
        return Err(Error::MockModel(format!("{what} sums to {sum}, not 1")));
    }
    Ok(())
}

impl TableMock {
    /// Builds a mock; every vector must share the default's length and sum to 1.
    pub fn new(rules: Vec<MockRule>, default: Vec<f64>) -> Result<Self> {
        let vocab_size = default.len();
        if vocab_size == 0 {
            return Err(Error::MockModel("empty vocabulary".into()));
        }
        check_vector(&default, vocab_size, "default")?;
        let mut compiled = Vec::with_capacity(rules.len());
        for (i, rule) in rules.iter().enumerate() {
            check_vector(&rule.probs, vocab_size, &format!("rule {i}"))?;
            if let Some(t) = rule.suffix.iter().find(|t| t.index() >= vocab_size) {
                return Err(Error::MockModel(format!(
                    "rule {i} suffix has out-of-vocabulary token {t}"
                )));
            }
            compiled.push(ProbStep::from_probs(rule.probs.clone())?);
        }
        let default_step = ProbStep::from_probs(default.clone())?;
        Ok(Self {
            vocab_size,
            eos_token: None,
            context_limit: DEFAULT_CONTEXT_LIMIT,
            rules,
            compiled,
            default,
            default_step,
            token_texts: None,
            model_id: "table-mock".to_string(),
        })
    }

    pub fn uniform(vocab_size: usize) -> Self {
        Self::new(Vec::new(), vec![1.0 / vocab_size as f64; vocab_size])
            .expect("uniform distribution is valid")
    }

    pub fn one_hot(vocab_size: usize, token: TokenId) -> Self {
        let mut p = vec![0.0; vocab_size];
        p[token.index()] = 1.0;
        Self::new(Vec::new(), p).expect("one-hot distribution is valid")
    }

    pub fn with_eos(mut self, eos: TokenId) -> Self {
        self.eos_token = Some(eos);
        self
    }

    pub fn with_context_limit(mut self, limit: usize) -> Self {
        self.context_limit = limit;
        self
    }

    pub fn with_model_id(mut self, id: impl Into<String>) -> Self {
        self.model_id = id.into();
        self
    }

    pub fn with_token_texts(mut self, texts: Vec<String>) -> Result<Self> {
        if texts.len() != self.vocab_size {
            return Err(Error::MockModel(format!(
                "{} token texts for vocab_size {}",
                texts.len(),
                self.vocab_size
            )));
        }
        self.token_texts = Some(texts);
        Ok(self)
    }

    pub fn rules(&self) -> &[MockRule] {
        &self.rules
    }

    /// Probability vector the mock returns for `prefix`.
    pub fn lookup(&self, prefix: &[TokenId]) -> &[f64] {
        match self.matching_rule(prefix) {
            Some(i) => &self.rules[i].probs,
            None => &self.default,
        }
    }

    fn matching_rule(&self, prefix: &[TokenId]) -> Option<usize> {
        let mut best: Option<(usize, usize)> = None;
        for (i, rule) in self.rules.iter().enumerate() {
            let n = rule.suffix.len();
            if n <= prefix.len() && prefix[prefix.len() - n..] == rule.suffix[..] {
                // strict comparison keeps the earliest rule among equal lengths
                if best.is_none_or(|(_, len)| n > len) {
                    best = Some((i, n));
                }
            }
        }
        best.map(|(i, _)| i)
    }

    pub fn from_file(file: MockModelFile) -> Result<Self> {
        if file.default.len() != file.vocab_size {
            return Err(Error::MockModel(format!(
                "default has {} entries, vocab_size is {}",
                file.default.len(),
                file.vocab_size
            )));
        }
        let mut mock = Self::new(file.rules, file.default)?;
        if let Some(eos) = file.eos_token {
            if eos.index() >= mock.vocab_size {
                return Err(Error::MockModel(format!(
                    "eos_token {eos} outside vocabulary"
                )));
            }
            mock = mock.with_eos(eos);
        }
        if let Some(limit) = file.context_limit {
            mock = mock.with_context_limit(limit);
        }
        if let Some(texts) = file.token_texts {
            mock = mock.with_token_texts(texts)?;
        }
        if let Some(id) = file.model_id {
            mock = mock.with_model_id(id);
        }
        Ok(mock)
    }

    pub fn from_json_str(json: &str) -> Result<Self> {
        Self::from_file(serde_json::from_str(json)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_file(&self) -> MockModelFile {
        MockModelFile {
            vocab_size: self.vocab_size,
            eos_token: self.eos_token,
            rules: self.rules.clone(),
            default: self.default.clone(),
            context_limit: (self.context_limit != DEFAULT_CONTEXT_LIMIT)
                .then_some(self.context_limit),
            token_texts: self.token_texts.clone(),
            model_id: Some(self.model_id.clone()),
        }
    }
}

impl LanguageModel for TableMock {
    fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    fn eos_token(&self) -> Option<TokenId> {
        self.eos_token
    }

    fn context_limit(&self) -> usize {
        self.context_limit
    }

    fn next_distribution(&self, prefix: &[TokenId]) -> Result<ProbStep> {
        Ok(match self.matching_rule(prefix) {
            Some(i) => self.compiled[i].clone(),
            None => self.default_step.clone(),
        })
    }

    fn model_id(&self) -> String {
        self.model_id.clone()
    }

    fn token_text(&self, token: TokenId) -> Option<String> {
        self.token_texts.as_ref()?.get(token.index()).cloned()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lm::tokens;

    #[test]
    fn empty_rules_always_default() {
        let m = TableMock::new(vec![], vec![1.0 / 3.0; 3]).unwrap();
        for prefix in [vec![0], vec![1, 2], vec![2, 2, 2]] {
            assert_eq!(m.lookup(&tokens(&prefix)), &[1.0 / 3.0; 3]);
        }
    }

    #[test]
    fn longest_suffix_wins_then_insertion_order() {
        let rules = vec![
            MockRule {
                suffix: tokens(&[2]),
                probs: vec![1.0, 0.0, 0.0],
            },
            MockRule {
                suffix: tokens(&[1, 2]),
                probs: vec![0.0, 1.0, 0.0],
            },
            MockRule {
                suffix: tokens(&[2]),
                probs: vec![0.0, 0.0, 1.0],
            },
        ];
        let m = TableMock::new(rules, vec![1.0 / 3.0; 3]).unwrap();
        assert_eq!(m.lookup(&tokens(&[0, 1, 2])), &[0.0, 1.0, 0.0]);
        assert_eq!(m.lookup(&tokens(&[0, 0, 2])), &[1.0, 0.0, 0.0]);
        assert_eq!(m.lookup(&tokens(&[2, 1])), &[1.0 / 3.0; 3]);
    }

    #[test]
    fn rejects_non_normalised_vectors() {
        assert!(matches!(
            TableMock::new(vec![], vec![0.5, 0.4]),
            Err(Error::MockModel(_))
        ));
        let bad_rule = MockRule {
            suffix: tokens(&[0]),
            probs: vec![0.6, 0.6],
        };
        assert!(TableMock::new(vec![bad_rule], vec![0.5, 0.5]).is_err());
        let wrong_len = MockRule {
            suffix: tokens(&[0]),
            probs: vec![1.0],
        };
        assert!(TableMock::new(vec![wrong_len], vec![0.5, 0.5]).is_err());
    }

    #[test]
    fn parses_model_file() {
        let json = r#"{
            "vocab_size": 3,
            "eos_token": 2,
            "rules": [{"suffix": [0], "probs": [0.0, 0.25, 0.75]}],
            "default": [0.5, 0.5, 0.0]
        }"#;
        let m = TableMock::from_json_str(json).unwrap();
        assert_eq!(m.eos_token(), Some(TokenId(2)));
        assert_eq!(
            m.next_distribution(&tokens(&[1, 0])).unwrap().argmax(),
            TokenId(2)
        );
        assert_eq!(
            m.next_distribution(&tokens(&[1])).unwrap().argmax(),
            TokenId(0)
        );
        let back = TableMock::from_file(m.to_file()).unwrap();
        assert_eq!(back.rules(), m.rules());
    }

    #[test]
    fn model_file_eos_must_be_in_vocab() {
        let json = r#"{"vocab_size": 2, "eos_token": 5, "rules": [], "default": [0.5, 0.5]}"#;
        assert!(TableMock::from_json_str(json).is_err());
    }
}
