//! Solves the 5-state line world with all four planners and checks the
//! value against exhaustive value iteration.

use lazy_pomdp::belief::{BeliefEngine, ExpectedStateHeuristic};
use lazy_pomdp::domains::line_world;
use lazy_pomdp::estimators::{Estimator, EstimatorConfig, EstimatorKind};
use lazy_pomdp::oracle::{solve_exhaustive, OracleConfig};
use lazy_pomdp::solvers::{lao_star, lazy_lao_star, lazy_rtdp_bel, rtdp_bel, SolverConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = line_world();
    let dist = model.dist_table();
    let heuristic = ExpectedStateHeuristic(dist.clone());
    let estimator =
        Estimator::new(EstimatorConfig::new(EstimatorKind::Qmdp))?.with_state_heuristic(dist);
    let config = SolverConfig::default();

    let oracle = solve_exhaustive(&model, &OracleConfig::default())?;
    println!(
        "exhaustive VI: V(b0) = {:.6} over {} beliefs",
        oracle.root_value(),
        oracle.num_beliefs()
    );

    for name in ["rtdp-bel", "lazy-rtdp-bel", "lao-star", "lazy-lao-star"] {
        let engine = BeliefEngine::new(&model);
        let r = match name {
            "rtdp-bel" => rtdp_bel(&engine, &heuristic, &config)?,
            "lazy-rtdp-bel" => lazy_rtdp_bel(&engine, &heuristic, &estimator, &config)?,
            "lao-star" => lao_star(&engine, &heuristic, &config)?,
            _ => lazy_lao_star(&engine, &heuristic, &estimator, &config)?,
        };
        println!(
            "{name:>14}: V(b0) = {:.6}  belief transitions = {}",
            r.value, r.ledger.belief_transitions_computed
        );
    }
    Ok(())
}
