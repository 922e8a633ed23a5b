use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use adadec_core::analysis;
use adadec_core::decoding::{
    generate, BasePolicy, DecodeConfig, Strategy, TauSetting, ADAPT_A, ADAPT_B,
    DEFAULT_LOOKAHEAD_LEN, DEFAULT_LOOKAHEAD_WIDTH, DEFAULT_MAX_LEN,
};
use adadec_core::harness::{self, scenarios, DatasetMode, EvalSettings};
use adadec_core::lm::{LanguageModel, RemoteModel, TableMock, TokenId, BRIDGE_URL_ENV};
use adadec_core::threshold::{self, ThresholdModel};

#[derive(Parser)]
#[command(
    name = "adadec",
    version,
    about = "Entropy-triggered lookahead decoding toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Teacher-forced trace collection over a dataset with reference solutions
    Collect {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Learn the entropy threshold from collected traces
    Fit {
        #[arg(long)]
        traces: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "unknown")]
        model_id: String,
        /// Also write the validation classifier report as JSON
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Decode a single prompt
    Generate {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        decode: DecodeArgs,
        /// Comma-separated prompt token ids
        #[arg(long, value_delimiter = ',', required = true)]
        prompt: Vec<u32>,
        /// Write the per-step log as JSON lines
        #[arg(long)]
        step_log: Option<PathBuf>,
    },
    /// Evaluate a dataset and report Pass@1, pause rate and latency
    Evaluate {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        decode: DecodeArgs,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Correlation, threshold sweep and drift analyses
    Analyze {
        #[command(subcommand)]
        what: AnalyzeCommand,
    },
    /// Evaluate the pause-then-rerank decoder at several lookahead lengths
    SweepL {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        decode: DecodeArgs,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        lengths: Vec<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Evaluate the pause-then-rerank decoder at shifted thresholds
    SweepTau {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        decode: DecodeArgs,
        #[arg(long)]
        dataset: PathBuf,
        /// Offsets added to the learned tau; `inf` and `-inf` are accepted
        #[arg(
            long,
            value_delimiter = ',',
            allow_hyphen_values = true,
            required = true
        )]
        offsets: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Write the scripted drift-rescue mock model and dataset
    Scenario {
        #[arg(long)]
        out_dir: PathBuf,
    },
}

#[derive(Subcommand)]
enum AnalyzeCommand {
    /// Spearman correlation between entropy and ground-truth rank
    Spearman {
        #[arg(long)]
        traces: PathBuf,
    },
    /// Share of steps above each threshold and average ranks on both sides
    Sweep {
        #[arg(long)]
        traces: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        lo: f64,
        #[arg(long, default_value_t = 3.0)]
        hi: f64,
        #[arg(long, default_value_t = 50)]
        points: usize,
        #[arg(long, default_value_t = analysis::DEFAULT_MAX_RANK)]
        max_rank: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// First divergence between generated and reference tokens per problem
    Drift {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        decode: DecodeArgs,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ModelArgs {
    /// Mock model definition (JSON)
    #[arg(long, conflicts_with = "bridge_url")]
    mock: Option<PathBuf>,
    /// Logits bridge base URL
    #[arg(long, env = BRIDGE_URL_ENV)]
    bridge_url: Option<String>,
    /// JSON array with the text of every token, for bridge-served models
    #[arg(long)]
    vocab: Option<PathBuf>,
    /// Head size requested from the bridge per step
    #[arg(long, default_value_t = 64)]
    top_m: usize,
}

impl ModelArgs {
    fn load(&self) -> Result<Box<dyn LanguageModel>> {
        if let Some(path) = &self.mock {
            let mock = TableMock::load(path)
                .with_context(|| format!("loading mock model {}", path.display()))?;
            return Ok(Box::new(mock));
        }
        let Some(url) = &self.bridge_url else {
            bail!("no model: pass --mock <file> or set {BRIDGE_URL_ENV}");
        };
        let mut remote = RemoteModel::connect(url)
            .with_context(|| format!("connecting to bridge at {url}"))?
            .with_top_m(self.top_m);
        if let Some(path) = &self.vocab {
            let texts: Vec<String> = serde_json::from_str(&std::fs::read_to_string(path)?)?;
            remote = remote.with_token_texts(texts)?;
        }
        Ok(Box::new(remote))
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Greedy,
    Sampling,
    Beam,
    Adapt,
    Adadec,
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    Greedy,
    Temperature,
    TopK,
    TopP,
}

#[derive(Args)]
struct DecodeArgs {
    #[arg(long, value_enum, default_value = "adadec")]
    strategy: StrategyArg,
    /// Base policy at steps that do not pause (and for `sampling`)
    #[arg(long, value_enum, default_value = "greedy")]
    policy: PolicyArg,
    #[arg(long, default_value_t = 1.0)]
    temperature: f64,
    #[arg(long, default_value_t = 50)]
    top_k: usize,
    #[arg(long, default_value_t = 0.95)]
    top_p: f64,
    /// learned | never-pause | always-pause | <number>
    #[arg(long, default_value = "learned", allow_hyphen_values = true)]
    tau: TauSetting,
    /// Threshold model JSON produced by `fit`
    #[arg(long)]
    threshold: Option<PathBuf>,
    #[arg(short = 'B', long, default_value_t = DEFAULT_LOOKAHEAD_WIDTH)]
    lookahead_width: usize,
    #[arg(short = 'L', long, default_value_t = DEFAULT_LOOKAHEAD_LEN)]
    lookahead_len: usize,
    #[arg(long, default_value_t = DEFAULT_MAX_LEN)]
    max_len: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 3)]
    beam_width: usize,
    #[arg(long, default_value_t = ADAPT_A)]
    adapt_a: f64,
    #[arg(long, default_value_t = ADAPT_B)]
    adapt_b: f64,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[arg(long)]
    parallel_lookahead: bool,
}

impl DecodeArgs {
    fn strategy(&self) -> Strategy {
        match self.strategy {
            StrategyArg::Greedy => Strategy::Greedy,
            StrategyArg::Sampling => Strategy::Sampling,
            StrategyArg::Beam => Strategy::Beam {
                width: self.beam_width,
            },
            StrategyArg::Adapt => Strategy::Adapt {
                a: self.adapt_a,
                b: self.adapt_b,
            },
            StrategyArg::Adadec => Strategy::Adadec,
        }
    }

    fn config(&self) -> DecodeConfig {
        let base_policy = match self.policy {
            PolicyArg::Greedy => BasePolicy::Greedy,
            PolicyArg::Temperature => BasePolicy::Temperature {
                temperature: self.temperature,
            },
            PolicyArg::TopK => BasePolicy::TopK {
                k: self.top_k,
                temperature: self.temperature,
            },
            PolicyArg::TopP => BasePolicy::TopP {
                p: self.top_p,
                temperature: self.temperature,
            },
        };
        DecodeConfig {
            base_policy,
            tau: self.tau,
            lookahead_width: self.lookahead_width,
            lookahead_len: self.lookahead_len,
            max_len: self.max_len,
            seed: self.seed,
            parallel_lookahead: self.parallel_lookahead,
        }
    }

    fn settings(&self) -> EvalSettings {
        EvalSettings {
            workers: self.workers.max(1),
            ..EvalSettings::new(self.strategy(), self.config())
        }
    }

    fn threshold(&self) -> Result<Option<ThresholdModel>> {
        self.threshold
            .as_ref()
            .map(|p| {
                ThresholdModel::load(p)
                    .with_context(|| format!("loading threshold model {}", p.display()))
            })
            .transpose()
    }
}

fn write_json<T: serde::Serialize>(path: Option<&Path>, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match path {
        Some(p) => {
            std::fs::write(p, text + "\n").with_context(|| format!("writing {}", p.display()))?
        }
        None => println!("{text}"),
    }
    Ok(())
}

fn load_problems(path: &Path, mode: DatasetMode) -> Result<Vec<harness::Problem>> {
    let problems = harness::load_dataset(path)
        .with_context(|| format!("loading dataset {}", path.display()))?;
    harness::validate_dataset(&problems, mode)?;
    Ok(problems)
}

fn print_summary(label: &str, report: &harness::EvalReport) {
    eprintln!(
        "{label}: pass@1 {:.4} ({}/{}), pause rate {:.4}, mean latency {:.4}s",
        report.aggregate.pass_at_1,
        report.aggregate.passed,
        report.aggregate.problems,
        harness::overall_pause_rate(report),
        report.aggregate.mean_wall_seconds
    );
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Collect {
            model,
            dataset,
            out,
        } => {
            let model = model.load()?;
            let examples: Vec<_> = load_problems(&dataset, DatasetMode::Collect)?
                .iter()
                .filter_map(harness::Problem::teacher_forced)
                .collect();
            let traces = threshold::collect(model.as_ref(), &examples)?;
            threshold::write_traces_csv(&out, &traces)?;
            let positive = traces.iter().filter(|t| t.top1_correct).count();
            eprintln!(
                "{} traces ({positive} top-1 correct) written to {}",
                traces.len(),
                out.display()
            );
        }
        Command::Fit {
            traces,
            out,
            seed,
            model_id,
            report,
        } => {
            let traces = threshold::read_traces_csv(&traces)?;
            let (model, split) = threshold::learn_threshold(&traces, seed, &model_id)?;
            model.save(&out)?;
            let metrics = threshold::evaluate_classifier(&model, &split.validation)?;
            eprintln!(
                "beta0 {:.6} beta1 {:.6} p* {:.2} tau {:.6}; validation accuracy {:.4} f1 {:.4} auc {}",
                model.beta0,
                model.beta1,
                model.p_star,
                model.tau,
                metrics.accuracy,
                metrics.f1,
                metrics.auc.map_or("n/a".to_string(), |a| format!("{a:.4}"))
            );
            if let Some(path) = report {
                write_json(Some(&path), &metrics)?;
            }
        }
        Command::Generate {
            model,
            decode,
            prompt,
            step_log,
        } => {
            let model = model.load()?;
            let threshold = decode.threshold()?;
            let prompt: Vec<TokenId> = prompt.into_iter().map(TokenId).collect();
            let result = generate(
                model.as_ref(),
                &prompt,
                decode.strategy(),
                &decode.config(),
                threshold.as_ref(),
            )?;
            if let Some(path) = step_log {
                let mut w = BufWriter::new(File::create(&path)?);
                result.write_step_log_jsonl(&mut w)?;
                w.flush()?;
            }
            let ids: Vec<String> = result.tokens.iter().map(|t| t.to_string()).collect();
            println!("{}", ids.join(","));
            eprintln!(
                "{} tokens, finished by {:?}, pause rate {:.4}",
                result.tokens.len(),
                result.finished_reason,
                result.pause_rate()
            );
        }
        Command::Evaluate {
            model,
            decode,
            dataset,
            out,
            csv,
        } => {
            let model = model.load()?;
            let problems = load_problems(&dataset, DatasetMode::Evaluate)?;
            let report = harness::run_eval(
                model.as_ref(),
                &problems,
                &decode.settings(),
                decode.threshold()?.as_ref(),
            )?;
            print_summary("evaluate", &report);
            if let Some(path) = csv {
                report.save_csv(path)?;
            }
            write_json(out.as_deref(), &report)?;
        }
        Command::Analyze { what } => analyze(what)?,
        Command::SweepL {
            model,
            decode,
            dataset,
            lengths,
            out,
            csv,
        } => {
            let model = model.load()?;
            let problems = load_problems(&dataset, DatasetMode::Evaluate)?;
            let mut settings = decode.settings();
            settings.strategy = Strategy::Adadec;
            let points = harness::sweep_l(
                model.as_ref(),
                &problems,
                &settings,
                decode.threshold()?.as_ref(),
                &lengths,
            )?;
            for p in &points {
                print_summary(&format!("L={}", p.lookahead_len), &p.report);
            }
            if let Some(path) = csv {
                let rows: Vec<_> = points
                    .iter()
                    .map(|p| (p.lookahead_len.to_string(), &p.report))
                    .collect();
                harness::write_sweep_summary_csv(path, "lookahead_len", &rows)?;
            }
            write_json(out.as_deref(), &points)?;
        }
        Command::SweepTau {
            model,
            decode,
            dataset,
            offsets,
            out,
            csv,
        } => {
            let model = model.load()?;
            let problems = load_problems(&dataset, DatasetMode::Evaluate)?;
            let Some(base) = decode.threshold()? else {
                bail!("sweep-tau needs --threshold");
            };
            let points = harness::sweep_tau(
                model.as_ref(),
                &problems,
                &decode.settings(),
                &base,
                &offsets,
            )?;
            for p in &points {
                print_summary(
                    &format!("tau={:.4} (offset {:+})", p.tau, p.offset),
                    &p.report,
                );
            }
            if let Some(path) = csv {
                let rows: Vec<_> = points
                    .iter()
                    .map(|p| (p.tau.to_string(), &p.report))
                    .collect();
                harness::write_sweep_summary_csv(path, "tau", &rows)?;
            }
            write_json(out.as_deref(), &points)?;
        }
        Command::Scenario { out_dir } => {
            std::fs::create_dir_all(&out_dir)?;
            let model_path = out_dir.join("drift_rescue_model.json");
            let data_path = out_dir.join("drift_rescue.jsonl");
            write_json(
                Some(&model_path),
                &scenarios::drift_rescue_model().to_file(),
            )?;
            harness::write_dataset(&data_path, &[scenarios::drift_rescue_problem()])?;
            eprintln!("wrote {} and {}", model_path.display(), data_path.display());
        }
    }
    Ok(())
}

fn analyze(what: AnalyzeCommand) -> Result<()> {
    match what {
        AnalyzeCommand::Spearman { traces } => {
            let traces = threshold::read_traces_csv(&traces)?;
            match analysis::entropy_rank_correlation(&traces)? {
                Some(rho) => println!("{rho}"),
                None => println!("undefined (constant input)"),
            }
        }
        AnalyzeCommand::Sweep {
            traces,
            lo,
            hi,
            points,
            max_rank,
            out,
        } => {
            let traces = threshold::read_traces_csv(&traces)?;
            let sweep = analysis::sweep(&traces, &analysis::linear_grid(lo, hi, points), max_rank)?;
            match out {
                Some(path) => analysis::write_sweep_csv(path, &sweep)?,
                None => write_json(None, &sweep)?,
            }
        }
        AnalyzeCommand::Drift {
            model,
            decode,
            dataset,
            out,
        } => {
            let model = model.load()?;
            let threshold = decode.threshold()?;
            let problems = load_problems(&dataset, DatasetMode::Collect)?;
            let mut candidates = Vec::new();
            let (mut at_drift, mut elsewhere) = (Vec::new(), Vec::new());
            for p in &problems {
                let reference = p.reference_tokens.as_deref().unwrap_or_default();
                let result = generate(
                    model.as_ref(),
                    &p.prompt_tokens,
                    decode.strategy(),
                    &decode.config(),
                    threshold.as_ref(),
                )?;
                let steps =
                    analysis::replay_steps(model.as_ref(), &p.prompt_tokens, &result.tokens)?;
                let drift = analysis::drift_candidate(&p.id, &result.tokens, reference, &steps)?;
                for (i, s) in steps.iter().enumerate() {
                    if drift.as_ref().is_some_and(|d| d.divergence_index == i) {
                        at_drift.push(s.entropy());
                    } else if drift.as_ref().is_none_or(|d| i < d.divergence_index) {
                        elsewhere.push(s.entropy());
                    }
                }
                candidates.extend(drift);
            }
            if !at_drift.is_empty() && !elsewhere.is_empty() {
                let (d, n) = analysis::entropy_summary(&at_drift, &elsewhere)?;
                eprintln!(
                    "entropy at divergence: median {:.4} mean {:.4} (n={}); before divergence: median {:.4} mean {:.4} (n={})",
                    d.median, d.mean, d.n, n.median, n.mean, n.n
                );
            }
            write_json(out.as_deref(), &candidates)?;
        }
    }
    Ok(())
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
