use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::planner::Planner;
use super::{Result, SolverConfig, SolverResult};
use crate::belief::{BeliefEngine, BeliefHeuristic, BeliefKey, BeliefState};
use crate::estimators::Estimator;

/// RTDP-Bel: trials from `b0` that evaluate every action of each visited belief.
pub fn rtdp_bel(
    engine: &BeliefEngine,
    heuristic: &dyn BeliefHeuristic,
    config: &SolverConfig,
) -> Result<SolverResult> {
    let mut p = Planner::new(engine, heuristic, None, config.clone())?;
    let converged = run(&mut p)?;
    Ok(p.finish(converged))
}

/// Lazy RTDP-Bel: Q-values start at estimator values and an action is
/// evaluated only once it is the argmin at its belief.
pub fn lazy_rtdp_bel(
    engine: &BeliefEngine,
    heuristic: &dyn BeliefHeuristic,
    estimator: &Estimator,
    config: &SolverConfig,
) -> Result<SolverResult> {
    let mut p = Planner::new(engine, heuristic, Some(estimator), config.clone())?;
    let converged = run(&mut p)?;
    Ok(p.finish(converged))
}

/// Runs trials until the greedy graph converges or a limit is hit. Counters
/// and the trial RNG continue across calls on the same planner.
pub(crate) fn run(p: &mut Planner) -> Result<bool> {
    if p.engine.is_goal_belief(&p.root) {
        return Ok(true);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(p.config.seed ^ p.stats.replans);
    let max_len = p
        .config
        .max_trial_length
        .unwrap_or(10 * p.engine.model().num_states().max(1));
    let mut since_check = 0usize;
    loop {
        if p.stats.trials as usize >= p.config.max_trials
            || p.stats.expansions as usize >= p.config.max_expansions
            || p.out_of_time()
        {
            return Ok(false);
        }
        trial(p, &mut rng, max_len)?;
        p.stats.trials += 1;
        since_check += 1;
        if since_check >= p.config.window {
            since_check = 0;
            if p.greedy_converged() {
                return Ok(true);
            }
        }
    }
}

fn trial(p: &mut Planner, rng: &mut ChaCha8Rng, max_len: usize) -> Result<()> {
    let mut belief: BeliefState = p.root.clone();
    let mut key: BeliefKey = p.root_key.clone();
    for _ in 0..max_len {
        p.ensure_initialized(&key, &belief)?;
        let Some(action) = p.settle(&key)? else {
            return Ok(());
        };
        let entry = p.table.get(&key).expect("settled").entry(action);
        // Drawing s ~ b, s' ~ T and z ~ O lands on branch z with probability
        // b_a(z), so the branch is drawn directly.
        let pick = WeightedIndex::new(entry.successors.iter().map(|s| s.probability))
            .expect("branch probabilities are positive")
            .sample(rng);
        let next = &entry.successors[pick];
        if next.goal {
            return Ok(());
        }
        let t = entry.transition().expect("settled action is evaluated");
        belief = t.branches[next.branch].successor.clone();
        key = next.key.clone();
    }
    Ok(())
}
