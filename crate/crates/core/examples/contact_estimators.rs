//! Subsampling estimators on the 100-hypothesis contact world: the mean of
//! each estimator over many seeds next to the exact lookahead.

use lazy_pomdp::belief::{ActionId, BeliefEngine, GoalPomdp, HypothesisCount};
use lazy_pomdp::domains::{contact_toy_model, planted_partition};
use lazy_pomdp::estimators::{q_init_exact, Estimator, EstimatorConfig, EstimatorKind};

const DRAWS: u64 = 2_000;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = contact_toy_model(planted_partition())?;
    let engine = BeliefEngine::new(&model);
    let b = model.initial_belief();
    let key = b.key();
    let action = ActionId(0);
    let exact = q_init_exact(&engine, &b, action, &HypothesisCount { alpha: 0.1 })?;
    println!("exact Q_init = {exact:.4} ({})", model.action_name(action));

    for kind in [
        EstimatorKind::SubsampleEntropyCorrected,
        EstimatorKind::SubsamplePce,
    ] {
        let mut sum = 0.0;
        let mut below = 0;
        for seed in 0..DRAWS {
            let est = Estimator::new(EstimatorConfig {
                seed,
                ..EstimatorConfig::new(kind)
            })?;
            let q = est.estimate(&engine, &b, &key, action)?;
            sum += q;
            below += (q <= exact) as u32;
        }
        println!(
            "{kind:?}: mean {:.4}, at or below exact in {:.1}% of draws",
            sum / DRAWS as f64,
            100.0 * below as f64 / DRAWS as f64
        );
    }
    Ok(())
}
