//! End-to-end evaluation: generate for every problem, score the output by
//! running its tests (or comparing against the reference), and aggregate
//! Pass@1, pause rate and latency.

mod dataset;
mod sandbox;
pub mod scenarios;

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::decoding::{generate, DecodeConfig, Strategy, TauSetting};
use crate::error::{Error, Result};
use crate::lm::{LanguageModel, TokenId};
use crate::threshold::ThresholdModel;

pub use dataset::{
    load_dataset, parse_dataset, validate_dataset, write_dataset, DatasetMode, Problem,
    DEFAULT_TIMEOUT_SECS,
};
pub use sandbox::{run_test, TestOutcome, PROGRAM_FILE};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSettings {
    pub strategy: Strategy,
    pub config: DecodeConfig,
    /// Problems evaluated concurrently; 1 runs them in order on this thread.
    #[serde(default = "one")]
    pub workers: usize,
}

fn one() -> usize {
    1
}

impl EvalSettings {
    pub fn new(strategy: Strategy, config: DecodeConfig) -> Self {
        Self {
            strategy,
            config,
            workers: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemOutcome {
    pub id: String,
    pub passed: bool,
    pub tokens_generated: usize,
    pub pause_rate: f64,
    /// Generation time only; test execution is not included.
    pub wall_seconds: f64,
    pub steps: usize,
    pub pauses: usize,
    #[serde(default)]
    pub timed_out: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exit_code: Option<i32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub pass_at_1: f64,
    pub mean_pause_rate: f64,
    pub mean_wall_seconds: f64,
    pub problems: usize,
    pub passed: usize,
}

impl Aggregate {
    pub fn from_rows(rows: &[ProblemOutcome]) -> Self {
        let n = rows.len();
        let mean = |f: fn(&ProblemOutcome) -> f64| {
            if n == 0 {
                0.0
            } else {
                rows.iter().map(f).sum::<f64>() / n as f64
            }
        };
        let passed = rows.iter().filter(|r| r.passed).count();
        Self {
            pass_at_1: if n == 0 {
                0.0
            } else {
                passed as f64 / n as f64
            },
            mean_pause_rate: mean(|r| r.pause_rate),
            mean_wall_seconds: mean(|r| r.wall_seconds),
            problems: n,
            passed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub per_problem: Vec<ProblemOutcome>,
    pub aggregate: Aggregate,
    /// SHA-256 over the model id, settings and effective tau.
    pub config_fingerprint: String,
    pub settings: EvalSettings,
    pub model_id: String,
}

impl EvalReport {
    /// The report with every timing field zeroed, for determinism checks.
    pub fn without_timing(&self) -> Self {
        let mut r = self.clone();
        for row in &mut r.per_problem {
            row.wall_seconds = 0.0;
        }
        r.aggregate.mean_wall_seconds = 0.0;
        r
    }

    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }

    /// Per-problem CSV: `id,passed,tokens_generated,pause_rate,wall_seconds`.
    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record([
            "id",
            "passed",
            "tokens_generated",
            "pause_rate",
            "wall_seconds",
        ])?;
        for r in &self.per_problem {
            w.write_record([
                r.id.clone(),
                r.passed.to_string(),
                r.tokens_generated.to_string(),
                r.pause_rate.to_string(),
                r.wall_seconds.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Program text handed to a test: prompt followed by the generated tokens,
/// without a trailing EOS. Tokens without known text render as their ids.
pub fn render_program(
    model: &dyn LanguageModel,
    prompt: &[TokenId],
    generated: &[TokenId],
) -> String {
    let body: Vec<TokenId> = prompt
        .iter()
        .chain(generated.iter().take_while(|t| !model.is_eos(**t)))
        .copied()
        .collect();
    match body
        .iter()
        .map(|&t| model.token_text(t))
        .collect::<Option<Vec<String>>>()
    {
        Some(texts) => texts.concat(),
        None => body
            .iter()
            .map(|t| t.to_string())
            .collect::<Vec<_>>()
            .join(" "),
    }
}

fn strip_eos(model: &dyn LanguageModel, tokens: &[TokenId]) -> Vec<TokenId> {
    tokens
        .iter()
        .take_while(|t| !model.is_eos(**t))
        .copied()
        .collect()
}

fn fingerprint(model_id: &str, settings: &EvalSettings, tau: Option<f64>) -> Result<String> {
    let mut hasher = Sha256::new();
    hasher.update(model_id.as_bytes());
    hasher.update(serde_json::to_vec(&settings.strategy)?);
    hasher.update(serde_json::to_vec(&settings.config)?);
    hasher.update(format!("{tau:?}").as_bytes());
    Ok(hex::encode(hasher.finalize()))
}

fn evaluate_problem(
    model: &dyn LanguageModel,
    problem: &Problem,
    settings: &EvalSettings,
    threshold: Option<&ThresholdModel>,
) -> Result<ProblemOutcome> {
    let start = Instant::now();
    let result = generate(
        model,
        &problem.prompt_tokens,
        settings.strategy,
        &settings.config,
        threshold,
    )?;
    let wall_seconds = start.elapsed().as_secs_f64();

    let (passed, timed_out, exit_code) = match (&problem.test_command, &problem.reference_tokens) {
        (Some(cmd), _) => {
            let program = render_program(model, &problem.prompt_tokens, &result.tokens);
            let outcome = run_test(cmd, &program, problem.timeout)?;
            if outcome.timed_out {
                log::warn!(
                    "problem {}: test timed out after {}s",
                    problem.id,
                    problem.timeout
                );
            }
            (outcome.passed, outcome.timed_out, outcome.exit_code)
        }
        (None, Some(reference)) => (
            strip_eos(model, &result.tokens) == strip_eos(model, reference),
            false,
            None,
        ),
        (None, None) => {
            return Err(Error::Config(format!(
                "problem {} has neither test_command nor reference",
                problem.id
            )));
        }
    };
    Ok(ProblemOutcome {
        id: problem.id.clone(),
        passed,
        tokens_generated: result.tokens.len(),
        pause_rate: result.pause_rate(),
        wall_seconds,
        steps: result.step_log.len(),
        pauses: result.pauses(),
        timed_out,
        exit_code,
    })
}

/// Generates and scores every problem, then aggregates.
///
/// Rows keep dataset order regardless of `settings.workers`. A failure to
/// launch a test aborts the run; a test timeout counts as a failed problem.
pub fn run_eval(
    model: &dyn LanguageModel,
    problems: &[Problem],
    settings: &EvalSettings,
    threshold: Option<&ThresholdModel>,
) -> Result<EvalReport> {
    settings.config.validate()?;
    validate_dataset(problems, DatasetMode::Evaluate)?;
    let tau = match settings.strategy {
        Strategy::Adadec => Some(settings.config.tau.resolve(threshold)?),
        _ => None,
    };
    let rows: Vec<ProblemOutcome> = if settings.workers > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(settings.workers)
            .build()
            .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
        pool.install(|| {
            problems
                .par_iter()
                .map(|p| evaluate_problem(model, p, settings, threshold))
                .collect::<Result<Vec<_>>>()
        })?
    } else {
        problems
            .iter()
            .map(|p| evaluate_problem(model, p, settings, threshold))
            .collect::<Result<Vec<_>>>()?
    };
    let model_id = model.model_id();
    Ok(EvalReport {
        aggregate: Aggregate::from_rows(&rows),
        per_problem: rows,
        config_fingerprint: fingerprint(&model_id, settings, tau)?,
        settings: settings.clone(),
        model_id,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LengthPoint {
    pub lookahead_len: usize,
    pub report: EvalReport,
}

/// One evaluation per lookahead length, everything else shared.
pub fn sweep_l(
    model: &dyn LanguageModel,
    problems: &[Problem],
    settings: &EvalSettings,
    threshold: Option<&ThresholdModel>,
    lengths: &[usize],
) -> Result<Vec<LengthPoint>> {
    if lengths.is_empty() {
        return Err(Error::Config("no lookahead lengths given".into()));
    }
    lengths
        .iter()
        .map(|&l| {
            let mut s = settings.clone();
            s.config.lookahead_len = l;
            Ok(LengthPoint {
                lookahead_len: l,
                report: run_eval(model, problems, &s, threshold)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TauPoint {
    pub offset: f64,
    pub tau: f64,
    pub pass_at_1: f64,
    pub pause_rate: f64,
    pub report: EvalReport,
}

/// Pause rate over all decoding steps of a run.
pub fn overall_pause_rate(report: &EvalReport) -> f64 {
    let steps: usize = report.per_problem.iter().map(|r| r.steps).sum();
    let pauses: usize = report.per_problem.iter().map(|r| r.pauses).sum();
    if steps == 0 {
        0.0
    } else {
        pauses as f64 / steps as f64
    }
}

/// Evaluates the pause-then-rerank decoder at `base.tau + offset` for each offset.
pub fn sweep_tau(
    model: &dyn LanguageModel,
    problems: &[Problem],
    settings: &EvalSettings,
    base: &ThresholdModel,
    offsets: &[f64],
) -> Result<Vec<TauPoint>> {
    if offsets.is_empty() {
        return Err(Error::Config("no tau offsets given".into()));
    }
    offsets
        .iter()
        .map(|&offset| {
            let tau = base.tau + offset;
            let mut s = settings.clone();
            s.strategy = Strategy::Adadec;
            s.config.tau = TauSetting::from_value(tau);
            let report = run_eval(model, problems, &s, Some(base))?;
            Ok(TauPoint {
                offset,
                tau,
                pass_at_1: report.aggregate.pass_at_1,
                pause_rate: overall_pause_rate(&report),
                report,
            })
        })
        .collect()
}

/// Summary CSV for a sweep: `param,pass_at_1,pause_rate,mean_wall_seconds`.
pub fn write_sweep_summary_csv(
    path: impl AsRef<Path>,
    param: &str,
    rows: &[(String, &EvalReport)],
) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([param, "pass_at_1", "pause_rate", "mean_wall_seconds"])?;
    for (value, report) in rows {
        w.write_record([
            value.clone(),
            report.aggregate.pass_at_1.to_string(),
            overall_pause_rate(report).to_string(),
            report.aggregate.mean_wall_seconds.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
