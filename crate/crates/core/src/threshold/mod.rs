//! Learning a model-specific entropy threshold.
//!
//! Pipeline: teacher-forced [`collect`]ion of per-token traces, class
//! [`balance`] by downsampling, [`fit_logistic`] on entropy, a grid search
//! over probability cutoffs ([`select_threshold`]) and conversion of the
//! chosen cutoff back to entropy units through the log-odds.

pub mod logistic;

use std::cmp::Ordering;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lm::{LanguageModel, LmSession, TokenId};
use crate::signals::{self, rank_of};

pub use logistic::{logit, sigmoid, LogisticFit};

/// Fraction of each class that goes to the training split.
pub const TRAIN_FRACTION: f64 = 0.8;
/// Number of probability cutoffs scanned: 0.01, 0.02, ..., 0.99.
pub const GRID_POINTS: u32 = 99;

/// One teacher-forced prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepTrace {
    pub problem_id: String,
    pub step_index: usize,
    pub entropy: f64,
    pub gt_rank: usize,
    pub top1_correct: bool,
    pub line_start: bool,
    /// Filled in only when the trace comes from a decoding run.
    #[serde(skip)]
    pub paused: Option<bool>,
}

/// A prompt together with its ground-truth continuation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeacherForcedExample {
    pub problem_id: String,
    pub prompt: Vec<TokenId>,
    pub solution: Vec<TokenId>,
}

fn collect_one(model: &dyn LanguageModel, ex: &TeacherForcedExample) -> Result<Vec<StepTrace>> {
    let mut session = LmSession::new(model, &ex.prompt)?;
    let mut traces = Vec::with_capacity(ex.solution.len());
    for (k, &gt) in ex.solution.iter().enumerate() {
        let step = session.step()?;
        let gt_rank = rank_of(&step, gt);
        traces.push(StepTrace {
            problem_id: ex.problem_id.clone(),
            step_index: k,
            entropy: step.entropy(),
            gt_rank,
            top1_correct: gt_rank == 1,
            line_start: k == 0 || signals::ends_line(model, ex.solution[k - 1]),
            paused: None,
        });
        if k + 1 < ex.solution.len() {
            session.push(gt)?;
        }
    }
    Ok(traces)
}

/// Teacher-forced next-token prediction: one trace per solution token, each
/// conditioned on the prompt and all preceding ground-truth tokens.
///
/// Problems that overflow the context window are skipped with a warning.
/// Problems are processed in parallel; the output keeps dataset order.
pub fn collect(
    model: &dyn LanguageModel,
    dataset: &[TeacherForcedExample],
) -> Result<Vec<StepTrace>> {
    if let Some(ex) = dataset.iter().find(|ex| ex.solution.is_empty()) {
        return Err(Error::Domain(format!(
            "problem {} has an empty solution",
            ex.problem_id
        )));
    }
    let per_problem: Vec<Result<Vec<StepTrace>>> = dataset
        .par_iter()
        .map(|ex| collect_one(model, ex))
        .collect();
    let mut traces = Vec::new();
    for (ex, result) in dataset.iter().zip(per_problem) {
        match result {
            Ok(t) => traces.extend(t),
            Err(Error::Length { len, limit }) => {
                log::warn!(
                    "skipping {}: context length {len} exceeds {limit}",
                    ex.problem_id
                );
            }
            Err(e) => return Err(e),
        }
    }
    Ok(traces)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingCounts {
    /// Top-1-correct traces before balancing.
    pub positive: usize,
    /// Top-1-incorrect traces before balancing.
    pub negative: usize,
    /// Traces kept per class after downsampling.
    pub per_class: usize,
    pub train: usize,
    pub validation: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BalancedSplit {
    pub train: Vec<StepTrace>,
    pub validation: Vec<StepTrace>,
    pub counts: TrainingCounts,
    pub seed: u64,
}

/// Downsamples the majority class to the minority count, then splits each
/// class 80/20 into train and validation. Deterministic in `seed`.
pub fn balance(traces: &[StepTrace], seed: u64) -> Result<BalancedSplit> {
    let (pos, neg): (Vec<&StepTrace>, Vec<&StepTrace>) =
        traces.iter().partition(|t| t.top1_correct);
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::TrainingData(format!(
            "need both classes, got {} positive and {} negative traces",
            pos.len(),
            neg.len()
        )));
    }
    let per_class = pos.len().min(neg.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut validation = Vec::new();
    for class in [pos, neg] {
        let mut kept: Vec<&StepTrace> = class
            .choose_multiple(&mut rng, per_class)
            .copied()
            .collect();
        kept.shuffle(&mut rng);
        let n_train = (per_class as f64 * TRAIN_FRACTION).round() as usize;
        train.extend(kept[..n_train].iter().map(|t| (*t).clone()));
        validation.extend(kept[n_train..].iter().map(|t| (*t).clone()));
    }
    let counts = TrainingCounts {
        positive: traces.iter().filter(|t| t.top1_correct).count(),
        negative: traces.iter().filter(|t| !t.top1_correct).count(),
        per_class,
        train: train.len(),
        validation: validation.len(),
    };
    Ok(BalancedSplit {
        train,
        validation,
        counts,
        seed,
    })
}

fn features(traces: &[StepTrace]) -> (Vec<f64>, Vec<bool>) {
    traces.iter().map(|t| (t.entropy, t.top1_correct)).unzip()
}

/// Fits `P(top-1 correct | entropy)` on the training traces.
pub fn fit_logistic(train: &[StepTrace]) -> Result<LogisticFit> {
    let (x, y) = features(train);
    logistic::fit(&x, &y)
}

/// Learned parameters and the entropy threshold derived from them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdModel {
    pub beta0: f64,
    pub beta1: f64,
    pub p_star: f64,
    pub tau: f64,
    #[serde(default)]
    pub model_id: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub counts: TrainingCounts,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

/// `(logit(p) - β0) / β1`.
pub fn entropy_threshold(beta0: f64, beta1: f64, p_star: f64) -> f64 {
    (logit(p_star) - beta0) / beta1
}

impl ThresholdModel {
    /// Derives tau from fitted parameters and a probability cutoff.
    pub fn from_parameters(beta0: f64, beta1: f64, p_star: f64) -> Result<Self> {
        if !(beta0.is_finite() && beta1.is_finite()) {
            return Err(Error::FitQuality(format!(
                "non-finite parameters ({beta0}, {beta1})"
            )));
        }
        if beta1 >= 0.0 {
            return Err(Error::FitQuality(format!(
                "slope {beta1} is not negative: higher entropy does not lower predicted correctness"
            )));
        }
        if !(0.01..=0.99).contains(&p_star) {
            return Err(Error::Domain(format!("p* = {p_star} outside [0.01, 0.99]")));
        }
        Ok(Self {
            beta0,
            beta1,
            p_star,
            tau: entropy_threshold(beta0, beta1, p_star),
            model_id: String::new(),
            seed: 0,
            counts: TrainingCounts::default(),
            flags: Vec::new(),
        })
    }

    pub fn predict(&self, entropy: f64) -> f64 {
        sigmoid(self.beta0 + self.beta1 * entropy)
    }

    /// Entropy-threshold classification: positive iff `entropy <= tau`.
    pub fn classify(&self, entropy: f64) -> bool {
        entropy <= self.tau
    }

    fn validate(&self) -> Result<()> {
        let expected = Self::from_parameters(self.beta0, self.beta1, self.p_star)?.tau;
        if (expected - self.tau).abs() > 1e-9 * expected.abs().max(1.0) {
            return Err(Error::Inconsistency(format!(
                "stored tau {} disagrees with parameters (expected {expected})",
                self.tau
            )));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let model: Self = serde_json::from_str(json)?;
        model.validate()?;
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// The cutoffs scanned by [`select_threshold`].
pub fn probability_grid() -> impl Iterator<Item = f64> {
    (1..=GRID_POINTS).map(|k| f64::from(k) / 100.0)
}

/// Number of validation traces classified correctly at each grid cutoff,
/// where a trace is predicted positive iff its probability exceeds the cutoff.
pub fn grid_accuracy(fit: &LogisticFit, validation: &[StepTrace]) -> Vec<(f64, usize)> {
    let scored: Vec<(f64, bool)> = validation
        .iter()
        .map(|t| (fit.predict(t.entropy), t.top1_correct))
        .collect();
    probability_grid()
        .map(|cut| {
            let correct = scored.iter().filter(|&&(p, y)| (p > cut) == y).count();
            (cut, correct)
        })
        .collect()
}

/// Picks the accuracy-maximising cutoff (ties go to the smaller cutoff) and
/// converts it to an entropy threshold.
pub fn select_threshold(fit: &LogisticFit, validation: &[StepTrace]) -> Result<ThresholdModel> {
    if validation.is_empty() {
        return Err(Error::TrainingData("empty validation set".into()));
    }
    let mut best: Option<(f64, usize)> = None;
    for (cut, correct) in grid_accuracy(fit, validation) {
        if best.is_none_or(|(_, c)| correct > c) {
            best = Some((cut, correct));
        }
    }
    let (p_star, _) = best.expect("grid is non-empty");
    let mut model = ThresholdModel::from_parameters(fit.beta0, fit.beta1, p_star)?;
    if fit.separated {
        model.flags.push("separated".into());
    }
    if fit.degenerate {
        model.flags.push("degenerate".into());
    }
    if !fit.converged {
        model.flags.push("not-converged".into());
    }
    Ok(model)
}

/// End-to-end threshold learning from collected traces.
pub fn learn_threshold(
    traces: &[StepTrace],
    seed: u64,
    model_id: &str,
) -> Result<(ThresholdModel, BalancedSplit)> {
    let split = balance(traces, seed)?;
    let fit = fit_logistic(&split.train)?;
    let mut model = select_threshold(&fit, &split.validation)?;
    model.model_id = model_id.to_string();
    model.seed = seed;
    model.counts = split.counts;
    Ok((model, split))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn accuracy(&self) -> f64 {
        ratio(self.tp + self.tn, self.total())
    }

    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r > 0.0 {
            2.0 * p * r / (p + r)
        } else {
            0.0
        }
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierReport {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Absent when the validation set holds a single class.
    pub auc: Option<f64>,
    pub confusion: ConfusionMatrix,
}

impl ClassifierReport {
    pub fn from_confusion(confusion: ConfusionMatrix, auc: Option<f64>) -> Self {
        Self {
            accuracy: confusion.accuracy(),
            precision: confusion.precision(),
            recall: confusion.recall(),
            f1: confusion.f1(),
            auc,
            confusion,
        }
    }
}

/// ROC AUC as the Mann–Whitney statistic with midranks for tied scores.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Option<f64> {
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap_or(Ordering::Equal));
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let midrank = (i + j) as f64 / 2.0 + 1.0;
        rank_sum_pos += midrank * order[i..=j].iter().filter(|&&k| labels[k]).count() as f64;
        i = j + 1;
    }
    let u = rank_sum_pos - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Some(u / (n_pos as f64 * n_neg as f64))
}

/// Scores the entropy-threshold classifier on held-out traces.
///
/// Accuracy, precision, recall and F1 use `entropy <= tau` (positive class =
/// top-1 correct); AUC is computed from the predicted probabilities.
pub fn evaluate_classifier(
    model: &ThresholdModel,
    validation: &[StepTrace],
) -> Result<ClassifierReport> {
    if validation.is_empty() {
        return Err(Error::TrainingData("empty validation set".into()));
    }
    let mut cm = ConfusionMatrix::default();
    for t in validation {
        match (model.classify(t.entropy), t.top1_correct) {
            (true, true) => cm.tp += 1,
            (true, false) => cm.fp += 1,
            (false, true) => cm.fn_ += 1,
            (false, false) => cm.tn += 1,
        }
    }
    let scores: Vec<f64> = validation
        .iter()
        .map(|t| model.predict(t.entropy))
        .collect();
    let labels: Vec<bool> = validation.iter().map(|t| t.top1_correct).collect();
    Ok(ClassifierReport::from_confusion(
        cm,
        roc_auc(&scores, &labels),
    ))
}

pub fn write_traces_csv(path: impl AsRef<Path>, traces: &[StepTrace]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for t in traces {
        w.serialize(t)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_traces_csv(path: impl AsRef<Path>) -> Result<Vec<StepTrace>> {
    let mut r = csv::Reader::from_path(path)?;
    let traces = r
        .deserialize()
        .collect::<std::result::Result<Vec<StepTrace>, _>>()?;
    if let Some(t) = traces
        .iter()
        .find(|t| t.top1_correct != (t.gt_rank == 1) || t.entropy < 0.0)
    {
        return Err(Error::Inconsistency(format!(
            "trace {}#{} violates top1_correct <=> gt_rank == 1 or has negative entropy",
            t.problem_id, t.step_index
        )));
    }
    Ok(traces)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lm::{tokens, MockRule, TableMock};

    fn trace(entropy: f64, correct: bool) -> StepTrace {
        StepTrace {
            problem_id: "p".into(),
            step_index: 0,
            entropy,
            gt_rank: if correct { 1 } else { 2 },
            top1_correct: correct,
            line_start: false,
            paused: None,
        }
    }

    fn example(prompt: &[u32], solution: &[u32]) -> TeacherForcedExample {
        TeacherForcedExample {
            problem_id: "ex".into(),
            prompt: tokens(prompt),
            solution: tokens(solution),
        }
    }

    #[test]
    fn collect_emits_one_trace_per_solution_token() {
        let m = TableMock::uniform(4);
        let t = collect(&m, &[example(&[0], &[1, 2, 3])]).unwrap();
        assert_eq!(t.len(), 3);
        assert_eq!(
            t.iter().map(|t| t.step_index).collect::<Vec<_>>(),
            vec![0, 1, 2]
        );
        assert!(t[0].line_start);
    }

    #[test]
    fn collect_on_matching_one_hot_is_all_correct() {
        let m = TableMock::one_hot(3, TokenId(1));
        let t = collect(&m, &[example(&[0], &[1, 1, 1])]).unwrap();
        assert!(t
            .iter()
            .all(|t| t.top1_correct && t.entropy == 0.0 && t.gt_rank == 1));
    }

    #[test]
    fn collect_records_scripted_rank() {
        // after prompt [0] + solution[0] = 1, the ground truth 2 is second most likely
        let rules = vec![
            MockRule {
                suffix: tokens(&[0]),
                probs: vec![0.0, 0.9, 0.05, 0.05],
            },
            MockRule {
                suffix: tokens(&[1]),
                probs: vec![0.0, 0.6, 0.3, 0.1],
            },
            MockRule {
                suffix: tokens(&[2]),
                probs: vec![0.0, 0.0, 0.0, 1.0],
            },
        ];
        let m = TableMock::new(rules, vec![0.25; 4]).unwrap();
        let t = collect(&m, &[example(&[0], &[1, 2, 3])]).unwrap();
        let oracle = rank_of(
            &crate::lm::ProbStep::from_probs(vec![0.0, 0.6, 0.3, 0.1]).unwrap(),
            TokenId(2),
        );
        assert_eq!(oracle, 2);
        assert_eq!(t[1].gt_rank, oracle);
        assert!(!t[1].top1_correct);
        assert!(t[0].top1_correct && t[2].top1_correct);
    }

    #[test]
    fn collect_skips_context_overflow() {
        let m = TableMock::uniform(3).with_context_limit(3);
        let data = [example(&[0], &[1, 2]), example(&[0, 0], &[1, 2, 0])];
        let t = collect(&m, &data).unwrap();
        assert_eq!(t.len(), 2);
    }

    #[test]
    fn collect_rejects_empty_solution() {
        let m = TableMock::uniform(3);
        assert!(collect(&m, &[example(&[0], &[])]).is_err());
    }

    #[test]
    fn balance_downsamples_and_stratifies() {
        let mut traces: Vec<StepTrace> = (0..100).map(|i| trace(i as f64 / 100.0, true)).collect();
        traces.extend((0..20).map(|i| trace(1.0 + i as f64 / 10.0, false)));
        let split = balance(&traces, 3).unwrap();
        assert_eq!(split.counts.per_class, 20);
        assert_eq!(split.train.len() + split.validation.len(), 40);
        let val_pos = split.validation.iter().filter(|t| t.top1_correct).count();
        let val_neg = split.validation.len() - val_pos;
        assert!(val_pos.abs_diff(val_neg) <= 1);
        assert_eq!(split.train.len(), 32);
        // retained traces are copies of inputs
        for t in split.train.iter().chain(&split.validation) {
            assert!(traces.contains(t));
        }
        assert_eq!(balance(&traces, 3).unwrap(), split);
        assert_ne!(balance(&traces, 4).unwrap().train, split.train);
    }

    #[test]
    fn balance_requires_both_classes() {
        let traces = vec![trace(0.1, true), trace(0.2, true)];
        assert!(matches!(balance(&traces, 0), Err(Error::TrainingData(_))));
    }

    #[test]
    fn closed_form_threshold_examples() {
        let m = ThresholdModel::from_parameters(2.0, -2.0, 0.5).unwrap();
        assert!((m.tau - 1.0).abs() < 1e-12);
        let m = ThresholdModel::from_parameters(0.0, -1.0, 0.73).unwrap();
        let oracle = -(0.73f64 / 0.27).ln();
        assert!((m.tau - oracle).abs() < 1e-12);
        assert!((m.tau + 0.9946).abs() < 1e-4);
    }

    #[test]
    fn non_negative_slope_is_fit_quality_error() {
        assert!(matches!(
            ThresholdModel::from_parameters(1.0, 0.5, 0.5),
            Err(Error::FitQuality(_))
        ));
        assert!(matches!(
            ThresholdModel::from_parameters(1.0, 0.0, 0.5),
            Err(Error::FitQuality(_))
        ));
    }

    #[test]
    fn selected_cutoff_is_grid_optimal_and_smallest() {
        let fit = LogisticFit {
            beta0: 2.0,
            beta1: -2.0,
            iterations: 0,
            converged: true,
            separated: false,
            degenerate: false,
        };
        let val: Vec<StepTrace> = [
            (0.2, true),
            (0.4, true),
            (0.9, false),
            (1.3, false),
            (0.95, true),
        ]
        .iter()
        .map(|&(h, c)| trace(h, c))
        .collect();
        let model = select_threshold(&fit, &val).unwrap();
        let grid = grid_accuracy(&fit, &val);
        let best = grid.iter().map(|g| g.1).max().unwrap();
        let first_best = grid.iter().find(|g| g.1 == best).unwrap().0;
        assert_eq!(model.p_star, first_best);
        assert!((sigmoid(model.beta0 + model.beta1 * model.tau) - model.p_star).abs() < 1e-9);
    }

    #[test]
    fn confusion_matrix_arithmetic() {
        let cm = ConfusionMatrix {
            tp: 8,
            fp: 2,
            fn_: 1,
            tn: 9,
        };
        assert!((cm.precision() - 0.8).abs() < 1e-15);
        assert!((cm.recall() - 8.0 / 9.0).abs() < 1e-15);
        let f1 = 2.0 * 0.8 * (8.0 / 9.0) / (0.8 + 8.0 / 9.0);
        assert!((cm.f1() - f1).abs() < 1e-15);
        assert!((cm.f1() - 0.8421).abs() < 1e-4);
        assert!((cm.accuracy() - 17.0 / 20.0).abs() < 1e-15);
    }

    #[test]
    fn separable_validation_scores_perfectly() {
        let model = ThresholdModel::from_parameters(2.0, -2.0, 0.5).unwrap();
        let val: Vec<StepTrace> = [(0.1, true), (0.5, true), (1.5, false), (2.5, false)]
            .iter()
            .map(|&(h, c)| trace(h, c))
            .collect();
        let r = evaluate_classifier(&model, &val).unwrap();
        assert_eq!(r.accuracy, 1.0);
        assert_eq!(r.auc, Some(1.0));
        assert_eq!(r.f1, 1.0);
    }

    #[test]
    fn single_class_validation_has_no_auc() {
        let model = ThresholdModel::from_parameters(2.0, -2.0, 0.5).unwrap();
        let r = evaluate_classifier(&model, &[trace(0.1, true), trace(2.0, true)]).unwrap();
        assert_eq!(r.auc, None);
        assert_eq!(r.accuracy, 0.5);
    }

    #[test]
    fn auc_handles_ties_with_midranks() {
        // one tie between a positive and a negative counts one half
        let auc = roc_auc(&[0.9, 0.5, 0.5, 0.1], &[true, true, false, false]).unwrap();
        assert!((auc - 0.875).abs() < 1e-15);
    }

    #[test]
    fn threshold_json_round_trip_and_validation() {
        let mut m = ThresholdModel::from_parameters(1.7, -1.9, 0.42).unwrap();
        m.model_id = "mock".into();
        m.seed = 9;
        let back = ThresholdModel::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back, m);
        let tampered = m.to_json().unwrap().replace(&format!("{}", m.tau), "0.5");
        assert!(ThresholdModel::from_json(&tampered).is_err());
    }

    #[test]
    fn trace_csv_header_and_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("traces.csv");
        let traces = vec![trace(0.25, true), trace(1.5, false)];
        write_traces_csv(&path, &traces).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "problem_id,step_index,entropy,gt_rank,top1_correct,line_start"
        );
        assert_eq!(read_traces_csv(&path).unwrap(), traces);
    }
}
