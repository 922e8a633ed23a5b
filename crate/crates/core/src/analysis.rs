//! Empirical-study instrumentation: entropy/rank correlation, threshold
//! sweeps, first-divergence drift candidates and group summaries.

use std::cmp::Ordering;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lm::{LanguageModel, LmSession, ProbStep, TokenId};
use crate::signals::rank_of;
use crate::threshold::StepTrace;

pub const DEFAULT_MAX_RANK: usize = 20;

/// 1-based ranks with tied values sharing the mean of their positions.
pub fn midranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(Ordering::Equal));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Spearman rank correlation (Pearson correlation of midranks).
///
/// `Ok(None)` when either input is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<Option<f64>> {
    if x.len() != y.len() {
        return Err(Error::Inconsistency(format!(
            "lengths differ: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::Domain("spearman needs at least two pairs".into()));
    }
    if x.iter().chain(y).any(|v| v.is_nan()) {
        return Err(Error::Domain("NaN in spearman input".into()));
    }
    Ok(pearson(&midranks(x), &midranks(y)))
}

/// Correlation between entropy and ground-truth rank over a trace corpus.
pub fn entropy_rank_correlation(traces: &[StepTrace]) -> Result<Option<f64>> {
    let h: Vec<f64> = traces.iter().map(|t| t.entropy).collect();
    let r: Vec<f64> = traces.iter().map(|t| t.gt_rank as f64).collect();
    spearman(&h, &r)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub threshold: f64,
    /// Fraction of all traces with entropy strictly above the threshold.
    pub pct_above: f64,
    pub avg_rank_above: Option<f64>,
    pub avg_rank_below: Option<f64>,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Threshold-sweep statistics. `pct_above` counts every trace; the average
/// ranks only use traces whose ground-truth rank is at most `max_rank`.
pub fn sweep(traces: &[StepTrace], thresholds: &[f64], max_rank: usize) -> Result<Vec<SweepPoint>> {
    if traces.is_empty() {
        return Err(Error::Domain("sweep needs at least one trace".into()));
    }
    let filtered: Vec<&StepTrace> = traces.iter().filter(|t| t.gt_rank <= max_rank).collect();
    Ok(thresholds
        .iter()
        .map(|&threshold| {
            let above = traces.iter().filter(|t| t.entropy > threshold).count();
            SweepPoint {
                threshold,
                pct_above: above as f64 / traces.len() as f64,
                avg_rank_above: mean(
                    filtered
                        .iter()
                        .filter(|t| t.entropy > threshold)
                        .map(|t| t.gt_rank as f64),
                ),
                avg_rank_below: mean(
                    filtered
                        .iter()
                        .filter(|t| t.entropy <= threshold)
                        .map(|t| t.gt_rank as f64),
                ),
            }
        })
        .collect())
}

/// `n` evenly spaced thresholds from `lo` to `hi` inclusive.
pub fn linear_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

pub fn write_sweep_csv(path: impl AsRef<Path>, points: &[SweepPoint]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["threshold", "pct_above", "avg_rank_above", "avg_rank_below"])?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for p in points {
        w.write_record([
            p.threshold.to_string(),
            p.pct_above.to_string(),
            opt(p.avg_rank_above),
            opt(p.avg_rank_below),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftCandidate {
    pub problem_id: String,
    pub divergence_index: usize,
    pub gt_token: TokenId,
    pub gt_rank_at_divergence: usize,
    pub entropy_at_divergence: f64,
}

/// Re-queries the model along `generated`, returning the distribution seen
/// before each generated token.
pub fn replay_steps(
    model: &dyn LanguageModel,
    prompt: &[TokenId],
    generated: &[TokenId],
) -> Result<Vec<ProbStep>> {
    let mut session = LmSession::new(model, prompt)?;
    let mut steps = Vec::with_capacity(generated.len());
    for (i, &t) in generated.iter().enumerate() {
        steps.push(session.step()?);
        if i + 1 < generated.len() {
            session.push(t)?;
        }
    }
    Ok(steps)
}

/// First position where `generated` leaves `reference`, annotated with the
/// reference token's rank and the entropy of the step distribution there.
///
/// `steps[i]` must be the distribution that produced `generated[i]`. Returns
/// `None` when one sequence is a prefix of the other.
pub fn drift_candidate(
    problem_id: &str,
    generated: &[TokenId],
    reference: &[TokenId],
    steps: &[ProbStep],
) -> Result<Option<DriftCandidate>> {
    if generated.is_empty() || reference.is_empty() {
        return Err(Error::Domain(
            "drift detection needs non-empty sequences".into(),
        ));
    }
    let Some(index) = generated.iter().zip(reference).position(|(g, r)| g != r) else {
        return Ok(None);
    };
    let step = steps.get(index).ok_or_else(|| {
        Error::Inconsistency(format!(
            "step log has {} entries, divergence at {index}",
            steps.len()
        ))
    })?;
    let gt_token = reference[index];
    Ok(Some(DriftCandidate {
        problem_id: problem_id.to_string(),
        divergence_index: index,
        gt_token,
        gt_rank_at_divergence: rank_of(step, gt_token),
        entropy_at_divergence: step.entropy(),
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub min: f64,
    pub max: f64,
}

/// Quantile by linear interpolation between closest ranks on sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub fn summarize(values: &[f64]) -> Result<Summary> {
    if values.is_empty() {
        return Err(Error::Domain("cannot summarise an empty group".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    Ok(Summary {
        n: sorted.len(),
        mean: sorted.iter().sum::<f64>() / sorted.len() as f64,
        median: quantile(&sorted, 0.5),
        q1: quantile(&sorted, 0.25),
        q3: quantile(&sorted, 0.75),
        min: sorted[0],
        max: sorted[sorted.len() - 1],
    })
}

/// Side-by-side summaries, e.g. entropies at drift points versus elsewhere.
pub fn entropy_summary(group_a: &[f64], group_b: &[f64]) -> Result<(Summary, Summary)> {
    Ok((summarize(group_a)?, summarize(group_b)?))
}
