//! Hazard-aware outdoor navigation. Full-horizon lazy validation checks only
//! the actions of candidate policies; eager validation checks every
//! evaluated action.

use lazy_pomdp::belief::{BeliefEngine, ExpectedStateHeuristic};
use lazy_pomdp::domains::fixtures;
use lazy_pomdp::estimators::{Estimator, EstimatorConfig, EstimatorKind};
use lazy_pomdp::solvers::{
    evaluate_policy, fh_lazy, lazy_lao_star, EvalMode, FhConfig, SolverConfig, ValidationMode,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = fixtures::outdoor_hazards();
    let dist = model.dist_table().expect("goal-directed");
    let heuristic = ExpectedStateHeuristic(dist.clone());
    let estimator =
        Estimator::new(EstimatorConfig::new(EstimatorKind::Qmdp))?.with_state_heuristic(dist);
    let config = SolverConfig::default();

    let fh = fh_lazy(
        &BeliefEngine::new(&model),
        &heuristic,
        Some(&estimator),
        &config,
        &FhConfig::default(),
    )?;
    let eager_config = SolverConfig {
        validation: ValidationMode::Eager,
        ..config
    };
    let eager = lazy_lao_star(
        &BeliefEngine::new(&model),
        &heuristic,
        &estimator,
        &eager_config,
    )?;

    for (name, r) in [("fh-lazy", &fh), ("eager", &eager)] {
        let cost = evaluate_policy(
            r.policy.as_ref().expect("converged"),
            &model,
            EvalMode::Exact,
        )?;
        println!(
            "{name:>8}: cost {cost:.4}  validity queries {:>5}  rounds {}",
            r.ledger.validity_queries, r.stats.replans
        );
    }
    Ok(())
}
