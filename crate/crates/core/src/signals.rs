//! Per-step uncertainty signals and candidate extraction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lm::{LanguageModel, ProbStep, TokenId, PROB_SUM_TOLERANCE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignalKind {
    Entropy,
    ProbDiff,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UncertaintySignal {
    pub kind: SignalKind,
    pub value: f64,
}

impl UncertaintySignal {
    pub fn measure(kind: SignalKind, probs: &[f64]) -> Result<Self> {
        let value = match kind {
            SignalKind::Entropy => entropy(probs)?,
            SignalKind::ProbDiff => prob_diff(probs)?,
        };
        Ok(Self { kind, value })
    }
}

fn validate(probs: &[f64]) -> Result<()> {
    if probs.is_empty() {
        return Err(Error::Domain("empty probability vector".into()));
    }
    if let Some((i, p)) = probs
        .iter()
        .enumerate()
        .find(|(_, p)| !p.is_finite() || **p < 0.0)
    {
        return Err(Error::Domain(format!("probability {i} is {p}")));
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > PROB_SUM_TOLERANCE {
        return Err(Error::Domain(format!("probabilities sum to {sum}")));
    }
    Ok(())
}

/// Shannon entropy in nats, `-Σ p ln p` over the non-zero entries.
pub fn entropy(probs: &[f64]) -> Result<f64> {
    validate(probs)?;
    let h: f64 = probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.ln())
        .sum();
    // a one-hot vector sums to -0.0
    Ok(h.max(0.0))
}

/// Gap between the two largest probabilities.
pub fn prob_diff(probs: &[f64]) -> Result<f64> {
    if probs.len() < 2 {
        return Err(Error::Domain("prob_diff needs at least two tokens".into()));
    }
    validate(probs)?;
    let (mut first, mut second) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for &p in probs {
        if p > first {
            second = first;
            first = p;
        } else if p > second {
            second = p;
        }
    }
    Ok(first - second)
}

/// Up to `width` most probable tokens with non-zero probability, in rank order.
pub fn top_candidates(step: &ProbStep, width: usize) -> Result<Vec<(TokenId, f64)>> {
    if width == 0 {
        return Err(Error::Domain("candidate width must be at least 1".into()));
    }
    Ok(step
        .ranked()
        .iter()
        .filter(|(_, lp)| *lp > f64::NEG_INFINITY)
        .take(width)
        .copied()
        .collect())
}

/// 1-based rank of `token` in the step's ranking (ties resolved by lower id).
///
/// Tokens a sparse step did not ship rank just after its last shipped token,
/// which is a lower bound on their true rank.
pub fn rank_of(step: &ProbStep, token: TokenId) -> usize {
    step.ranked()
        .iter()
        .position(|(t, _)| *t == token)
        .map_or(step.ranked().len() + 1, |i| i + 1)
}

/// Whether `token`'s surface text contains a newline. Tokens without known
/// text never end a line.
pub fn ends_line(model: &dyn LanguageModel, token: TokenId) -> bool {
    model.token_text(token).is_some_and(|t| t.contains('\n'))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn entropy_examples() {
        assert!(close(entropy(&[0.5, 0.5]).unwrap(), 2f64.ln(), 1e-12));
        assert_eq!(entropy(&[1.0, 0.0, 0.0]).unwrap(), 0.0);
        // -(0.7 ln 0.7 + 0.2 ln 0.2 + 0.1 ln 0.1), evaluated independently
        let oracle = 0.7 * (1.0f64 / 0.7).ln() + 0.2 * 5f64.ln() + 0.1 * 10f64.ln();
        let h = entropy(&[0.7, 0.2, 0.1]).unwrap();
        assert!(close(h, oracle, 1e-12));
        assert!(close(h, 0.801819, 1e-6));
    }

    #[test]
    fn entropy_rejects_invalid_vectors() {
        assert!(entropy(&[0.5, 0.6]).is_err());
        assert!(entropy(&[1.1, -0.1]).is_err());
        assert!(entropy(&[]).is_err());
        assert!(entropy(&[f64::NAN, 1.0]).is_err());
    }

    #[test]
    fn prob_diff_examples() {
        assert_eq!(prob_diff(&[0.5, 0.5]).unwrap(), 0.0);
        assert_eq!(prob_diff(&[1.0, 0.0]).unwrap(), 1.0);
        assert!(close(prob_diff(&[0.7, 0.2, 0.1]).unwrap(), 0.5, 1e-12));
        assert!(close(prob_diff(&[0.1, 0.2, 0.7]).unwrap(), 0.5, 1e-12));
        assert!(prob_diff(&[1.0]).is_err());
    }

    #[test]
    fn top_candidates_examples() {
        let uniform = ProbStep::from_probs(vec![0.25; 4]).unwrap();
        let ids: Vec<u32> = top_candidates(&uniform, 2)
            .unwrap()
            .iter()
            .map(|c| c.0 .0)
            .collect();
        assert_eq!(ids, vec![0, 1]);

        let step = ProbStep::from_probs(vec![0.1, 0.6, 0.3]).unwrap();
        let c = top_candidates(&step, 2).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c[0].0, TokenId(1));
        assert!(close(c[0].1, 0.6f64.ln(), 1e-15));
        assert_eq!(c[1].0, TokenId(2));
        assert!(close(c[1].1, 0.3f64.ln(), 1e-15));

        assert_eq!(top_candidates(&step, 10).unwrap().len(), 3);
        assert!(top_candidates(&step, 0).is_err());
    }

    #[test]
    fn top_candidates_skips_zero_probability() {
        let step = ProbStep::from_probs(vec![0.0, 1.0, 0.0]).unwrap();
        let c = top_candidates(&step, 3).unwrap();
        assert_eq!(c, vec![(TokenId(1), 0.0)]);
    }

    #[test]
    fn rank_examples() {
        let step = ProbStep::from_probs(vec![0.7, 0.2, 0.1]).unwrap();
        assert_eq!(rank_of(&step, TokenId(0)), 1);
        assert_eq!(rank_of(&step, TokenId(2)), 3);
        let uniform = ProbStep::from_probs(vec![1.0 / 3.0; 3]).unwrap();
        assert_eq!(rank_of(&uniform, TokenId(2)), 3);
    }

    #[test]
    fn rank_beyond_sparse_head() {
        let step =
            ProbStep::from_sparse(10, 1.0, vec![(TokenId(4), -0.5), (TokenId(1), -1.5)]).unwrap();
        assert_eq!(rank_of(&step, TokenId(1)), 2);
        assert_eq!(rank_of(&step, TokenId(9)), 3);
    }

    fn distribution(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.0f64..1.0, 2..max_len).prop_filter_map("positive mass", |w| {
            let s: f64 = w.iter().sum();
            (s > 1e-6).then(|| w.iter().map(|x| x / s).collect())
        })
    }

    proptest! {
        #[test]
        fn entropy_bounded_by_log_vocab(p in distribution(40)) {
            let h = entropy(&p).unwrap();
            prop_assert!(h >= 0.0);
            prop_assert!(h <= (p.len() as f64).ln() + 1e-12);
        }

        #[test]
        fn entropy_permutation_invariant(p in distribution(40), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let mut q = p.clone();
            q.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            prop_assert!(close(entropy(&p).unwrap(), entropy(&q).unwrap(), 1e-12));
        }

        #[test]
        fn argmax_has_rank_one(p in distribution(30)) {
            let step = ProbStep::from_probs(p.clone()).unwrap();
            let best = p.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let first_max = p.iter().position(|&x| x == best).unwrap();
            prop_assert_eq!(step.argmax(), TokenId(first_max as u32));
            prop_assert_eq!(rank_of(&step, TokenId(first_max as u32)), 1);
        }
    }
}
