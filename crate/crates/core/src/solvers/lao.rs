use std::collections::{BTreeSet, HashMap, VecDeque};

use super::planner::{ImproveOutcome, Planner};
use super::{Result, SolverConfig, SolverResult};
use crate::belief::{BeliefEngine, BeliefHeuristic, BeliefKey};
use crate::estimators::Estimator;

/// LAO*: expands tips of the greedy solution graph, evaluating every action.
pub fn lao_star(
    engine: &BeliefEngine,
    heuristic: &dyn BeliefHeuristic,
    config: &SolverConfig,
) -> Result<SolverResult> {
    let mut p = Planner::new(engine, heuristic, None, config.clone())?;
    let converged = run(&mut p)?;
    Ok(p.finish(converged))
}

/// Lazy LAO*: a tip is also any belief whose best action is unevaluated.
pub fn lazy_lao_star(
    engine: &BeliefEngine,
    heuristic: &dyn BeliefHeuristic,
    estimator: &Estimator,
    config: &SolverConfig,
) -> Result<SolverResult> {
    let mut p = Planner::new(engine, heuristic, Some(estimator), config.clone())?;
    let converged = run(&mut p)?;
    Ok(p.finish(converged))
}

pub(crate) fn run(p: &mut Planner) -> Result<bool> {
    if p.engine.is_goal_belief(&p.root) {
        return Ok(true);
    }
    let lazy = p.is_lazy();
    loop {
        if p.stats.expansions as usize >= p.config.max_expansions || p.out_of_time() {
            return Ok(false);
        }
        p.stats.outer_iterations += 1;
        let graph = p.solution_graph();
        let depth: HashMap<BeliefKey, usize> = graph
            .interior
            .iter()
            .cloned()
            .chain(graph.tips.iter().map(|(k, _, d)| (k.clone(), *d)))
            .collect();

        // Deepest tip first, ties by key.
        let tip = graph
            .tips
            .iter()
            .max_by(|a, b| a.2.cmp(&b.2).then_with(|| b.0.cmp(&a.0)));
        if let Some((key, belief, _)) = tip {
            p.ensure_initialized(key, belief)?;
            p.settle(key)?;
            let z = ancestors(key, &graph.parents);
            let mut order: Vec<BeliefKey> = z.into_iter().collect();
            order.sort_by(|a, b| depth[b].cmp(&depth[a]).then_with(|| a.cmp(b)));
            p.improve_values(&order, lazy);
            continue;
        }

        let mut order: Vec<BeliefKey> = graph.interior.iter().map(|(k, _)| k.clone()).collect();
        order.reverse();
        if p.improve_values(&order, lazy) == ImproveOutcome::Converged {
            return Ok(true);
        }
    }
}

/// `key` together with every belief in the graph that reaches it.
fn ancestors(key: &BeliefKey, parents: &HashMap<BeliefKey, Vec<BeliefKey>>) -> BTreeSet<BeliefKey> {
    let mut seen = BTreeSet::new();
    let mut queue = VecDeque::from([key.clone()]);
    seen.insert(key.clone());
    while let Some(k) = queue.pop_front() {
        for parent in parents.get(&k).into_iter().flatten() {
            if seen.insert(parent.clone()) {
                queue.push_back(parent.clone());
            }
        }
    }
    seen
}
