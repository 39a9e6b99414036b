//! Slip-cell navigation on the 15×15 map: vanilla vs lazy LAO* over a few
//! random start/goal pairs, comparing belief-transition counts.

use lazy_pomdp::belief::{BeliefEngine, ExpectedStateHeuristic};
use lazy_pomdp::domains::fixtures;
use lazy_pomdp::estimators::{Estimator, EstimatorConfig, EstimatorKind};
use lazy_pomdp::solvers::{evaluate_policy, lao_star, lazy_lao_star, EvalMode, SolverConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    println!("seed  V(b0)     vanilla  lazy  ratio");
    for seed in 0..5 {
        let model = fixtures::indoor_slip_large(&mut ChaCha8Rng::seed_from_u64(seed));
        let dist = model.dist_table().expect("goal-directed");
        let heuristic = ExpectedStateHeuristic(dist.clone());
        let estimator =
            Estimator::new(EstimatorConfig::new(EstimatorKind::Qmdp))?.with_state_heuristic(dist);
        let config = SolverConfig {
            seed,
            ..SolverConfig::default()
        };

        let vanilla = lao_star(&BeliefEngine::new(&model), &heuristic, &config)?;
        let lazy = lazy_lao_star(&BeliefEngine::new(&model), &heuristic, &estimator, &config)?;
        let cost = evaluate_policy(
            lazy.policy.as_ref().expect("converged"),
            &model,
            EvalMode::Exact,
        )?;
        let (v, l) = (
            vanilla.ledger.belief_transitions_computed,
            lazy.ledger.belief_transitions_computed,
        );
        println!(
            "{seed:>4}  {cost:<8.4}  {v:>7}  {l:>4}  {:.2}",
            v as f64 / l as f64
        );
    }
    Ok(())
}
