//! Three equally likely start poses on the 5×5 map. Prints the policy as a
//! list of beliefs and the primitive chosen in each.

use lazy_pomdp::belief::{BeliefEngine, ExpectedStateHeuristic, GoalPomdp};
use lazy_pomdp::domains::fixtures;
use lazy_pomdp::estimators::{Estimator, EstimatorConfig, EstimatorKind};
use lazy_pomdp::solvers::{lazy_rtdp_bel, SolverConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = fixtures::indoor_start_small();
    let dist = model.dist_table().expect("goal-directed");
    let heuristic = ExpectedStateHeuristic(dist.clone());
    let estimator =
        Estimator::new(EstimatorConfig::new(EstimatorKind::Qmdp))?.with_state_heuristic(dist);
    let engine = BeliefEngine::new(&model);
    let r = lazy_rtdp_bel(&engine, &heuristic, &estimator, &SolverConfig::default())?;

    println!("V(b0) = {} after {} trials", r.value, r.stats.trials);
    let policy = r.policy.expect("converged");
    for node in policy.nodes.values() {
        let poses: Vec<String> = node
            .belief
            .particles()
            .iter()
            .map(|(s, p)| format!("{}@{p:.2}", model.pose(*s)))
            .collect();
        println!(
            "  {{{}}} -> {}",
            poses.join(", "),
            model.action_name(node.action)
        );
    }
    Ok(())
}
