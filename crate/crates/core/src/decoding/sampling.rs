//! Temperature, top-k and top-p sampling, and AdapT.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{run_stepwise, BasePolicy, DecodeConfig, GenerationResult};
use crate::error::{Error, Result};
use crate::lm::{LanguageModel, ProbStep, TokenId};

/// AdapT temperature for line-start tokens.
pub const ADAPT_A: f64 = 0.5;
/// AdapT temperature for every other token.
pub const ADAPT_B: f64 = 0.05;

/// Rescales ranked probabilities as `softmax(ln p / T)`, in log space.
fn apply_temperature(ranked: &[(TokenId, f64)], temperature: f64) -> Vec<(TokenId, f64)> {
    let live: Vec<(TokenId, f64)> = ranked.iter().filter(|(_, p)| *p > 0.0).copied().collect();
    let top = live[0].1.ln();
    let weights: Vec<f64> = live
        .iter()
        .map(|(_, p)| ((p.ln() - top) / temperature).exp())
        .collect();
    let total: f64 = weights.iter().sum();
    live.iter()
        .zip(weights)
        .map(|(&(t, _), w)| (t, w / total))
        .collect()
}

fn renormalise(mut dist: Vec<(TokenId, f64)>) -> Vec<(TokenId, f64)> {
    let total: f64 = dist.iter().map(|(_, p)| p).sum();
    for entry in &mut dist {
        entry.1 /= total;
    }
    dist
}

/// The distribution a base policy samples from, in rank order.
///
/// Temperature is applied first, then the top-k or top-p filter, then the
/// survivors are renormalised. Greedy yields the argmax with mass 1.
pub fn policy_distribution(step: &ProbStep, policy: &BasePolicy) -> Vec<(TokenId, f64)> {
    let ranked = step.ranked_probs();
    match *policy {
        BasePolicy::Greedy => vec![(step.argmax(), 1.0)],
        BasePolicy::Temperature { temperature } => apply_temperature(&ranked, temperature),
        BasePolicy::TopK { k, temperature } => {
            let mut dist = apply_temperature(&ranked, temperature);
            dist.truncate(k);
            renormalise(dist)
        }
        BasePolicy::TopP { p, temperature } => {
            let dist = apply_temperature(&ranked, temperature);
            let mut cumulative = 0.0;
            let mut keep = dist.len();
            for (i, (_, q)) in dist.iter().enumerate() {
                cumulative += q;
                if cumulative >= p {
                    keep = i + 1;
                    break;
                }
            }
            renormalise(dist[..keep].to_vec())
        }
    }
}

/// Inverse-CDF draw from `dist` using one uniform variate.
pub fn sample_index(dist: &[(TokenId, f64)], rng: &mut impl Rng) -> TokenId {
    let u: f64 = rng.gen();
    let mut cumulative = 0.0;
    for &(t, p) in dist {
        cumulative += p;
        if u < cumulative {
            return t;
        }
    }
    dist.last().expect("non-empty distribution").0
}

pub(crate) fn choose_with_policy(
    step: &ProbStep,
    policy: &BasePolicy,
    rng: &mut ChaCha8Rng,
) -> TokenId {
    if policy.is_stochastic() {
        sample_index(&policy_distribution(step, policy), rng)
    } else {
        step.argmax()
    }
}

/// Samples every token from the config's base policy with a seeded RNG.
pub fn decode_sampling(
    model: &dyn LanguageModel,
    prompt: &[TokenId],
    config: &DecodeConfig,
) -> Result<GenerationResult> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    run_stepwise(model, prompt, config.max_len, |_, _, step| {
        Ok((
            choose_with_policy(step, &config.base_policy, &mut rng),
            None,
        ))
    })
}

/// AdapT: temperature `a` at line starts, `b` elsewhere.
///
/// A step is a line start when it is the first generated step or the
/// previously emitted token ends a line according to `ends_line`.
pub fn decode_adapt(
    model: &dyn LanguageModel,
    prompt: &[TokenId],
    config: &DecodeConfig,
    a: f64,
    b: f64,
    ends_line: &dyn Fn(TokenId) -> bool,
) -> Result<GenerationResult> {
    if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
        return Err(Error::Config(format!(
            "AdapT temperatures must be positive, got a={a}, b={b}"
        )));
    }
    if config.max_len == 0 {
        return Err(Error::Config("max_len must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut previous: Option<TokenId> = None;
    run_stepwise(model, prompt, config.max_len, |idx, _, step| {
        let line_start = idx == 0 || previous.is_some_and(ends_line);
        let temperature = if line_start { a } else { b };
        let token = sample_index(
            &policy_distribution(step, &BasePolicy::Temperature { temperature }),
            &mut rng,
        );
        previous = Some(token);
        Ok((token, None))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decoding::decode_greedy;
    use crate::lm::{tokens, MockRule, TableMock};

    fn counts(model: &TableMock, policy: BasePolicy, draws: usize) -> Vec<usize> {
        let step = model.next_distribution(&tokens(&[0])).unwrap();
        let dist = policy_distribution(&step, &policy);
        let mut rng = ChaCha8Rng::seed_from_u64(1234);
        let mut c = vec![0; model.vocab_size()];
        for _ in 0..draws {
            c[sample_index(&dist, &mut rng).index()] += 1;
        }
        c
    }

    fn two_way() -> TableMock {
        TableMock::new(vec![], vec![0.6, 0.4]).unwrap()
    }

    #[test]
    fn temperature_distribution_matches_analytic_form() {
        let step = ProbStep::from_probs(vec![0.6, 0.4]).unwrap();
        for t in [0.01, 0.5, 1.0, 2.0] {
            let d = policy_distribution(&step, &BasePolicy::Temperature { temperature: t });
            let w0 = 0.6f64.powf(1.0 / t);
            let w1 = 0.4f64.powf(1.0 / t);
            assert!((d[0].1 - w0 / (w0 + w1)).abs() < 1e-12, "T={t}");
        }
    }

    #[test]
    fn low_temperature_is_nearly_greedy() {
        let c = counts(
            &two_way(),
            BasePolicy::Temperature { temperature: 0.01 },
            10_000,
        );
        assert!(c[0] as f64 / 10_000.0 >= 0.999);
    }

    #[test]
    fn unit_temperature_full_nucleus_reproduces_probs() {
        let m = TableMock::new(vec![], vec![0.5, 0.3, 0.15, 0.05]).unwrap();
        let c = counts(
            &m,
            BasePolicy::TopP {
                p: 1.0,
                temperature: 1.0,
            },
            10_000,
        );
        for (i, p) in [0.5, 0.3, 0.15, 0.05].iter().enumerate() {
            assert!((c[i] as f64 / 10_000.0 - p).abs() <= 0.02, "{c:?}");
        }
    }

    #[test]
    fn top_k_and_top_p_filters() {
        let step = ProbStep::from_probs(vec![0.1, 0.5, 0.25, 0.15]).unwrap();
        let d = policy_distribution(
            &step,
            &BasePolicy::TopK {
                k: 2,
                temperature: 1.0,
            },
        );
        assert_eq!(d.iter().map(|x| x.0 .0).collect::<Vec<_>>(), vec![1, 2]);
        assert!((d[0].1 - 0.5 / 0.75).abs() < 1e-12);
        let d = policy_distribution(
            &step,
            &BasePolicy::TopP {
                p: 0.8,
                temperature: 1.0,
            },
        );
        assert_eq!(d.iter().map(|x| x.0 .0).collect::<Vec<_>>(), vec![1, 2, 3]);
        let d = policy_distribution(
            &step,
            &BasePolicy::TopP {
                p: 0.5,
                temperature: 1.0,
            },
        );
        assert_eq!(d, vec![(TokenId(1), 1.0)]);
    }

    #[test]
    fn top_k_one_reduces_to_greedy() {
        let rules = vec![
            MockRule {
                suffix: tokens(&[0]),
                probs: vec![0.1, 0.3, 0.6],
            },
            MockRule {
                suffix: tokens(&[2]),
                probs: vec![0.2, 0.5, 0.3],
            },
            MockRule {
                suffix: tokens(&[1]),
                probs: vec![0.4, 0.35, 0.25],
            },
        ];
        let m = TableMock::new(rules, vec![0.2, 0.3, 0.5]).unwrap();
        let config = DecodeConfig {
            base_policy: BasePolicy::TopK {
                k: 1,
                temperature: 0.7,
            },
            max_len: 12,
            seed: 5,
            ..Default::default()
        };
        let sampled = decode_sampling(&m, &tokens(&[0]), &config).unwrap();
        let greedy = decode_greedy(&m, &tokens(&[0]), 12).unwrap();
        assert_eq!(sampled.tokens, greedy.tokens);
    }

    #[test]
    fn sampling_is_seed_deterministic() {
        let m = TableMock::uniform(5);
        let config = DecodeConfig {
            base_policy: BasePolicy::Temperature { temperature: 1.0 },
            max_len: 30,
            seed: 77,
            ..Default::default()
        };
        let a = decode_sampling(&m, &tokens(&[0]), &config).unwrap();
        let b = decode_sampling(&m, &tokens(&[0]), &config).unwrap();
        assert_eq!(a, b);
        let other =
            decode_sampling(&m, &tokens(&[0]), &DecodeConfig { seed: 78, ..config }).unwrap();
        assert_ne!(a.tokens, other.tokens);
    }

    #[test]
    fn adapt_with_equal_temperatures_matches_sampling() {
        let m = TableMock::new(vec![], vec![0.4, 0.3, 0.2, 0.1]).unwrap();
        let config = DecodeConfig {
            base_policy: BasePolicy::Temperature { temperature: 0.8 },
            max_len: 40,
            seed: 3,
            ..Default::default()
        };
        let sampled = decode_sampling(&m, &tokens(&[0]), &config).unwrap();
        let adapt =
            decode_adapt(&m, &tokens(&[0]), &config, 0.8, 0.8, &|t| t == TokenId(3)).unwrap();
        assert_eq!(sampled.tokens, adapt.tokens);
    }

    #[test]
    fn adapt_low_b_is_nearly_greedy_off_line_start() {
        let c = counts(
            &two_way(),
            BasePolicy::Temperature {
                temperature: ADAPT_B,
            },
            10_000,
        );
        assert!(c[0] as f64 / 10_000.0 >= 0.999);
    }

    #[test]
    fn adapt_first_step_uses_line_start_temperature() {
        // a huge `a` flattens the first step; a tiny `b` makes later steps greedy
        let m = TableMock::new(vec![], vec![0.9, 0.1]).unwrap();
        let mut first_is_one = 0;
        for seed in 0..400 {
            let config = DecodeConfig {
                max_len: 3,
                seed,
                ..Default::default()
            };
            let r = decode_adapt(&m, &tokens(&[0]), &config, 1e6, 1e-3, &|_| false).unwrap();
            first_is_one += usize::from(r.tokens[0] == TokenId(1));
            assert_eq!(&r.tokens[1..], &tokens(&[0, 0])[..]);
        }
        // near-uniform first draw: roughly half the runs pick token 1
        assert!((150..250).contains(&first_is_one), "{first_is_one}");
    }

    #[test]
    fn adapt_rejects_non_positive_temperatures() {
        let m = two_way();
        let config = DecodeConfig::default();
        assert!(decode_adapt(&m, &tokens(&[0]), &config, 0.0, 0.05, &|_| false).is_err());
    }
}
