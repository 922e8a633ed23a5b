//! Length-synchronous beam search over cumulative log-probability.

use std::cmp::Ordering;

use super::{FinishReason, GenerationResult, StepRecord};
use crate::error::{Error, Result};
use crate::lm::{LanguageModel, LmSession, TokenId};
use crate::signals::top_candidates;

#[derive(Debug, Clone)]
struct Hypothesis {
    tokens: Vec<TokenId>,
    score: f64,
    log: Vec<StepRecord>,
}

/// Higher score first, then lexicographically smaller token sequence.
fn hypothesis_order(a: &(f64, Vec<TokenId>), b: &(f64, Vec<TokenId>)) -> Ordering {
    b.0.partial_cmp(&a.0)
        .unwrap_or(Ordering::Equal)
        .then_with(|| a.1.cmp(&b.1))
}

fn best(pool: Vec<Hypothesis>) -> Option<Hypothesis> {
    pool.into_iter()
        .min_by(|a, b| hypothesis_order(&(a.score, a.tokens.clone()), &(b.score, b.tokens.clone())))
}

/// Keeps the `beam_width` best live hypotheses per step; hypotheses ending in
/// EOS retire to a finished pool.
///
/// Returns the best finished hypothesis, or the best live one if none
/// finished within `max_len`. Search stops early once the best finished
/// score strictly exceeds every live score, since extending a hypothesis
/// never raises its score.
pub fn decode_beam(
    model: &dyn LanguageModel,
    prompt: &[TokenId],
    beam_width: usize,
    max_len: usize,
) -> Result<GenerationResult> {
    if beam_width == 0 {
        return Err(Error::Config("beam width must be at least 1".into()));
    }
    if max_len == 0 {
        return Err(Error::Config("max_len must be at least 1".into()));
    }
    let root = LmSession::new(model, prompt)?;
    let mut live = vec![Hypothesis {
        tokens: Vec::new(),
        score: 0.0,
        log: Vec::new(),
    }];
    let mut finished: Vec<Hypothesis> = Vec::new();
    let mut context_full = false;

    for depth in 0..max_len {
        // (score, extended tokens, parent index, token, entropy)
        let mut expansions: Vec<(f64, Vec<TokenId>, usize, TokenId, f64)> = Vec::new();
        for (parent, hyp) in live.iter().enumerate() {
            let mut session = root.clone();
            for &t in &hyp.tokens {
                session.push(t)?;
            }
            let step = session.step()?;
            // each parent contributes at most one EOS, so width + 1 per parent
            // always covers the global selection below
            for (token, logprob) in top_candidates(&step, beam_width + 1)? {
                let mut extended = hyp.tokens.clone();
                extended.push(token);
                expansions.push((hyp.score + logprob, extended, parent, token, step.entropy()));
            }
        }
        expansions.sort_by(|a, b| hypothesis_order(&(a.0, a.1.clone()), &(b.0, b.1.clone())));

        let mut next = Vec::with_capacity(beam_width);
        for (score, tokens, parent, token, entropy) in expansions {
            if next.len() == beam_width {
                break;
            }
            let mut log = live[parent].log.clone();
            log.push(StepRecord {
                idx: depth,
                entropy,
                paused: false,
                chosen: token,
                candidates: None,
            });
            let hyp = Hypothesis { tokens, score, log };
            if model.is_eos(token) {
                finished.push(hyp);
            } else {
                next.push(hyp);
            }
        }
        live = next;

        let best_live = live
            .iter()
            .map(|h| h.score)
            .fold(f64::NEG_INFINITY, f64::max);
        let best_finished = finished
            .iter()
            .map(|h| h.score)
            .fold(f64::NEG_INFINITY, f64::max);
        if live.is_empty() || (!finished.is_empty() && best_finished > best_live) {
            break;
        }
        if live
            .iter()
            .all(|h| prompt.len() + h.tokens.len() >= model.context_limit())
        {
            context_full = true;
            break;
        }
    }

    let (hyp, finished_reason) = match best(finished) {
        Some(h) => (h, FinishReason::Eos),
        None => {
            let reason = if context_full {
                FinishReason::ContextLimit
            } else {
                FinishReason::MaxLen
            };
            (
                best(live).expect("live beam is non-empty without finished hypotheses"),
                reason,
            )
        }
    };
    Ok(GenerationResult {
        tokens: hyp.tokens,
        step_log: hyp.log,
        finished_reason,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decoding::decode_greedy;
    use crate::lm::{tokens, MockRule, TableMock};

    #[test]
    fn width_one_is_greedy() {
        let rules = vec![
            MockRule {
                suffix: tokens(&[0]),
                probs: vec![0.1, 0.5, 0.3, 0.1],
            },
            MockRule {
                suffix: tokens(&[1]),
                probs: vec![0.3, 0.1, 0.4, 0.2],
            },
            MockRule {
                suffix: tokens(&[2]),
                probs: vec![0.2, 0.5, 0.2, 0.1],
            },
        ];
        let m = TableMock::new(rules, vec![0.25; 4])
            .unwrap()
            .with_eos(TokenId(3));
        let g = decode_greedy(&m, &tokens(&[0]), 6).unwrap();
        let b = decode_beam(&m, &tokens(&[0]), 1, 6).unwrap();
        assert_eq!(g.tokens, b.tokens);
    }

    #[test]
    fn wider_beam_escapes_greedy_trap() {
        // greedy takes 1 (p 0.5) and then faces a flat 1/3 split; 2 (p 0.4)
        // leads to a near-certain EOS
        let rules = vec![
            MockRule {
                suffix: tokens(&[0]),
                probs: vec![0.1, 0.5, 0.4, 0.0],
            },
            MockRule {
                suffix: tokens(&[1]),
                probs: vec![1.0 / 3.0, 1.0 / 3.0, 0.0, 1.0 / 3.0],
            },
            MockRule {
                suffix: tokens(&[2]),
                probs: vec![0.0, 0.0, 0.05, 0.95],
            },
        ];
        let m = TableMock::new(rules, vec![0.25; 4])
            .unwrap()
            .with_eos(TokenId(3));
        assert_eq!(
            decode_greedy(&m, &tokens(&[0]), 2).unwrap().tokens[0],
            TokenId(1)
        );
        let b = decode_beam(&m, &tokens(&[0]), 2, 2).unwrap();
        assert_eq!(b.tokens, tokens(&[2, 3]));
        assert_eq!(b.finished_reason, FinishReason::Eos);
    }

    #[test]
    fn exhaustive_two_step_vocab_three() {
        let rules = vec![
            MockRule {
                suffix: tokens(&[0]),
                probs: vec![0.4, 0.25, 0.35],
            },
            MockRule {
                suffix: tokens(&[1]),
                probs: vec![0.2, 0.2, 0.6],
            },
            MockRule {
                suffix: tokens(&[2]),
                probs: vec![0.025, 0.95, 0.025],
            },
        ];
        let m = TableMock::new(rules, vec![1.0 / 3.0; 3]).unwrap();
        let prompt = tokens(&[0]);
        let mut best = (f64::NEG_INFINITY, vec![]);
        for a in 0..3u32 {
            for b in 0..3u32 {
                let p1 = m.lookup(&prompt)[a as usize];
                let p2 = m.lookup(&tokens(&[0, a]))[b as usize];
                let s = p1.ln() + p2.ln();
                if s > best.0 {
                    best = (s, vec![a, b]);
                }
            }
        }
        let r = decode_beam(&m, &prompt, 3, 2).unwrap();
        assert_eq!(r.tokens, tokens(&best.1));
        assert_eq!(r.tokens, tokens(&[2, 1]));
        assert_eq!(r.step_log.len(), 2);
    }

    #[test]
    fn rejects_zero_width() {
        let m = TableMock::uniform(3);
        assert!(decode_beam(&m, &tokens(&[0]), 0, 3).is_err());
    }
}
