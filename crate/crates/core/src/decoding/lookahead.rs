//! Entropy-triggered pause-then-rerank decoding.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::sampling::choose_with_policy;
use super::{run_stepwise, DecodeConfig, GenerationResult, Trajectory};
use crate::error::Result;
use crate::lm::{LmSession, TokenId};
use crate::signals::top_candidates;
use crate::threshold::ThresholdModel;

/// Scores `candidate` by appending it to a fork of `session` and extending
/// greedily for up to `len` tokens.
///
/// The rollout stops early at EOS (which is kept and scored) or when the
/// context window is full. The score is the mean log-probability over the
/// candidate and its continuation. `session` is not modified.
pub fn lookahead_score(
    session: &LmSession<'_>,
    candidate: TokenId,
    candidate_logprob: f64,
    len: usize,
) -> Result<Trajectory> {
    let model = session.model();
    let mut continuation = Vec::new();
    let mut continuation_logprobs = Vec::new();
    if len > 0 && !model.is_eos(candidate) && session.has_room() {
        let mut fork = session.clone();
        fork.push(candidate)?;
        for i in 0..len {
            let step = fork.step()?;
            let (token, logprob) = step.ranked()[0];
            continuation.push(token);
            continuation_logprobs.push(logprob);
            if model.is_eos(token) || i + 1 == len || !fork.has_room() {
                break;
            }
            fork.push(token)?;
        }
    }
    let mut trajectory = Trajectory {
        first: candidate,
        first_logprob: candidate_logprob,
        continuation,
        continuation_logprobs,
        score: 0.0,
    };
    trajectory.score = trajectory.recompute_score();
    Ok(trajectory)
}

fn score_candidates(
    session: &LmSession<'_>,
    candidates: &[(TokenId, f64)],
    len: usize,
    parallel: bool,
) -> Result<Vec<Trajectory>> {
    if !parallel || candidates.len() < 2 {
        return candidates
            .iter()
            .map(|&(t, lp)| lookahead_score(session, t, lp, len))
            .collect();
    }
    std::thread::scope(|scope| {
        let handles: Vec<_> = candidates
            .iter()
            .map(|&(t, lp)| scope.spawn(move || lookahead_score(session, t, lp, len)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("lookahead rollout panicked"))
            .collect()
    })
}

/// Index of the best trajectory. Candidates arrive in rank order, so keeping
/// the first maximum breaks ties by higher probability, then lower id.
fn best_trajectory(trajectories: &[Trajectory]) -> usize {
    let mut best = 0;
    for (i, t) in trajectories.iter().enumerate().skip(1) {
        if t.score > trajectories[best].score {
            best = i;
        }
    }
    best
}

/// Decodes with the base policy while entropy stays at or below tau; above
/// tau, reranks the top candidates by lookahead score and emits the winner.
///
/// Only the chosen candidate is committed; its lookahead continuation is
/// discarded. The RNG of a stochastic base policy advances only at steps
/// that do not pause.
pub fn decode_adadec(
    model: &dyn crate::lm::LanguageModel,
    prompt: &[TokenId],
    config: &DecodeConfig,
    threshold: Option<&ThresholdModel>,
) -> Result<GenerationResult> {
    config.validate()?;
    let tau = config.tau.resolve(threshold)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    run_stepwise(model, prompt, config.max_len, |_, session, step| {
        if step.entropy() <= tau {
            return Ok((
                choose_with_policy(step, &config.base_policy, &mut rng),
                None,
            ));
        }
        let candidates = top_candidates(step, config.lookahead_width)?;
        let trajectories = score_candidates(
            session,
            &candidates,
            config.lookahead_len,
            config.parallel_lookahead,
        )?;
        let chosen = trajectories[best_trajectory(&trajectories)].first;
        Ok((chosen, Some(trajectories)))
    })
}
