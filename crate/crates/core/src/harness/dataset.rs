use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lm::TokenId;
use crate::threshold::TeacherForcedExample;

pub const DEFAULT_TIMEOUT_SECS: f64 = 10.0;

fn default_timeout() -> f64 {
    DEFAULT_TIMEOUT_SECS
}

/// One benchmark problem, read from a JSON-lines dataset.
///
/// `test_command` is run through `sh -c` inside a fresh directory; `{program}`
/// expands to the path of the file holding the generated program and `{dir}`
/// to the directory itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Problem {
    pub id: String,
    #[serde(default)]
    pub prompt_tokens: Vec<TokenId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt_text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_tokens: Option<Vec<TokenId>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_command: Option<String>,
    #[serde(default = "default_timeout")]
    pub timeout: f64,
}

impl Problem {
    pub fn new(id: impl Into<String>, prompt_tokens: Vec<TokenId>) -> Self {
        Self {
            id: id.into(),
            prompt_tokens,
            prompt_text: None,
            reference_tokens: None,
            test_command: None,
            timeout: DEFAULT_TIMEOUT_SECS,
        }
    }

    pub fn with_reference(mut self, reference: Vec<TokenId>) -> Self {
        self.reference_tokens = Some(reference);
        self
    }

    pub fn with_test_command(mut self, command: impl Into<String>) -> Self {
        self.test_command = Some(command.into());
        self
    }

    pub fn teacher_forced(&self) -> Option<TeacherForcedExample> {
        Some(TeacherForcedExample {
            problem_id: self.id.clone(),
            prompt: self.prompt_tokens.clone(),
            solution: self.reference_tokens.clone()?,
        })
    }
}

/// What a dataset is about to be used for; each mode needs different fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetMode {
    Generate,
    Evaluate,
    Collect,
}

/// Reads a JSON-lines dataset. Blank lines are skipped; order is preserved.
pub fn load_dataset(path: impl AsRef<Path>) -> Result<Vec<Problem>> {
    let file = std::fs::File::open(path)?;
    parse_dataset(BufReader::new(file))
}

pub fn parse_dataset(reader: impl BufRead) -> Result<Vec<Problem>> {
    let mut problems = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let problem: Problem = serde_json::from_str(&line).map_err(|e| Error::Dataset {
            line: i + 1,
            message: e.to_string(),
        })?;
        if !(problem.timeout > 0.0 && problem.timeout.is_finite()) {
            return Err(Error::Dataset {
                line: i + 1,
                message: format!("timeout must be positive, got {}", problem.timeout),
            });
        }
        problems.push(problem);
    }
    Ok(problems)
}

/// Checks that every problem carries what `mode` needs.
pub fn validate_dataset(problems: &[Problem], mode: DatasetMode) -> Result<()> {
    for (i, p) in problems.iter().enumerate() {
        let fail = |message: String| Error::Dataset {
            line: i + 1,
            message: format!("problem {}: {message}", p.id),
        };
        if p.prompt_tokens.is_empty() {
            return Err(fail(if p.prompt_text.is_some() {
                "prompt_text must be tokenized into prompt_tokens before decoding".into()
            } else {
                "empty prompt".into()
            }));
        }
        match mode {
            DatasetMode::Generate => {}
            DatasetMode::Evaluate => {
                if p.reference_tokens.is_none() && p.test_command.is_none() {
                    return Err(fail(
                        "needs reference_tokens or test_command to be evaluated".into(),
                    ));
                }
            }
            DatasetMode::Collect => {
                if p.reference_tokens.as_ref().is_none_or(|r| r.is_empty()) {
                    return Err(fail(
                        "needs non-empty reference_tokens for trace collection".into(),
                    ));
                }
            }
        }
    }
    Ok(())
}

pub fn write_dataset(path: impl AsRef<Path>, problems: &[Problem]) -> Result<()> {
    let mut out = String::new();
    for p in problems {
        out.push_str(&serde_json::to_string(p)?);
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}
