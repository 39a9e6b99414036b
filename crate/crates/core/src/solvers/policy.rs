use std::collections::{BTreeMap, BTreeSet, VecDeque};

use nalgebra::{DMatrix, DVector};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::planner::Planner;
use super::{Result, SolverError};
use crate::belief::{ActionId, BeliefEngine, BeliefKey, BeliefState, GoalPomdp, ObservationId};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolicyBranch {
    pub observation: ObservationId,
    pub probability: f64,
    pub successor: BeliefKey,
    pub goal: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolicyNode {
    pub belief: BeliefState,
    pub action: ActionId,
    pub expected_cost: f64,
    pub branches: Vec<PolicyBranch>,
}

/// Closed policy: every non-goal branch leads to another node of the graph.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolicyGraph {
    pub root: BeliefKey,
    pub root_belief: BeliefState,
    /// Empty when the root is a goal belief.
    pub nodes: BTreeMap<BeliefKey, PolicyNode>,
}

impl PolicyGraph {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn action_at(&self, key: &BeliefKey) -> Option<ActionId> {
        self.nodes.get(key).map(|n| n.action)
    }

    /// Builds the graph of a fixed decision rule from `root`, computing (and
    /// caching) each belief transition on the way. Fails with
    /// [`SolverError::OpenPolicy`] past `max_nodes` beliefs.
    pub fn from_rule(
        engine: &BeliefEngine,
        root: &BeliefState,
        rule: impl Fn(&BeliefState) -> ActionId,
        max_nodes: usize,
    ) -> Result<Self> {
        let mut nodes = BTreeMap::new();
        let mut queue = VecDeque::new();
        if !engine.is_goal_belief(root) {
            queue.push_back(root.clone());
        }
        while let Some(b) = queue.pop_front() {
            let key = b.key();
            if nodes.contains_key(&key) {
                continue;
            }
            if nodes.len() >= max_nodes {
                return Err(SolverError::OpenPolicy(format!(
                    "more than {max_nodes} beliefs"
                )));
            }
            let action = rule(&b);
            let t = engine.compute_keyed(&key, &b, action)?;
            let mut branches = Vec::with_capacity(t.branches.len());
            for br in &t.branches {
                let goal = engine.is_goal_belief(&br.successor);
                if !goal {
                    queue.push_back(br.successor.clone());
                }
                branches.push(PolicyBranch {
                    observation: br.observation,
                    probability: br.probability,
                    successor: br.successor.key(),
                    goal,
                });
            }
            nodes.insert(
                key,
                PolicyNode {
                    belief: b,
                    action,
                    expected_cost: t.expected_cost,
                    branches,
                },
            );
        }
        Ok(PolicyGraph {
            root: root.key(),
            root_belief: root.clone(),
            nodes,
        })
    }
}

impl Planner<'_, '_> {
    /// Greedy closure of the current Q-table from the root.
    pub fn extract_policy(&self) -> Result<PolicyGraph> {
        let mut nodes = BTreeMap::new();
        if !self.engine.is_goal_belief(&self.root) {
            let mut queue = VecDeque::from([self.root_key.clone()]);
            let mut seen = BTreeSet::from([self.root_key.clone()]);
            while let Some(key) = queue.pop_front() {
                let node = self.table.get(&key).ok_or_else(|| {
                    SolverError::OpenPolicy(format!(
                        "belief {:016x} was never expanded",
                        key.digest()
                    ))
                })?;
                let action = node.best_action().ok_or_else(|| {
                    SolverError::OpenPolicy(format!(
                        "belief {:016x} has no applicable action",
                        key.digest()
                    ))
                })?;
                let entry = node.entry(action);
                let t = entry.transition().ok_or_else(|| {
                    SolverError::OpenPolicy(format!(
                        "best action {action} at belief {:016x} is unevaluated",
                        key.digest()
                    ))
                })?;
                let mut branches = Vec::with_capacity(entry.successors.len());
                for s in entry.successors.iter() {
                    if !s.goal && seen.insert(s.key.clone()) {
                        queue.push_back(s.key.clone());
                    }
                    branches.push(PolicyBranch {
                        observation: t.branches[s.branch].observation,
                        probability: s.probability,
                        successor: s.key.clone(),
                        goal: s.goal,
                    });
                }
                nodes.insert(
                    key,
                    PolicyNode {
                        belief: node.belief.clone(),
                        action,
                        expected_cost: t.expected_cost,
                        branches,
                    },
                );
            }
        }
        Ok(PolicyGraph {
            root: self.root_key.clone(),
            root_belief: self.root.clone(),
            nodes,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EvalMode {
    /// Solves the linear cost-to-go system of the policy graph.
    Exact,
    /// Averages rollouts that sample the hidden state.
    MonteCarlo {
        rollouts: usize,
        seed: u64,
        max_steps: usize,
    },
}

/// Expected cost of following `policy` from its root.
pub fn evaluate_policy(policy: &PolicyGraph, model: &dyn GoalPomdp, mode: EvalMode) -> Result<f64> {
    if policy.nodes.is_empty() {
        return Ok(0.0);
    }
    match mode {
        EvalMode::Exact => exact(policy),
        EvalMode::MonteCarlo {
            rollouts,
            seed,
            max_steps,
        } => monte_carlo(policy, model, rollouts, seed, max_steps),
    }
}

fn exact(policy: &PolicyGraph) -> Result<f64> {
    let index: BTreeMap<&BeliefKey, usize> = policy
        .nodes
        .keys()
        .enumerate()
        .map(|(i, k)| (k, i))
        .collect();
    let n = index.len();
    for node in policy.nodes.values() {
        if let Some(b) = node
            .branches
            .iter()
            .find(|b| !b.goal && !index.contains_key(&b.successor))
        {
            return Err(SolverError::OpenPolicy(format!(
                "branch to belief {:016x} leaves the graph",
                b.successor.digest()
            )));
        }
    }

    // Nodes from which a goal branch is reachable.
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut reaches: Vec<bool> = vec![false; n];
    let mut queue = VecDeque::new();
    for (i, node) in policy.nodes.values().enumerate() {
        for b in &node.branches {
            if b.goal {
                if !reaches[i] {
                    reaches[i] = true;
                    queue.push_back(i);
                }
            } else {
                preds[index[&b.successor]].push(i);
            }
        }
    }
    while let Some(i) = queue.pop_front() {
        for &p in &preds[i] {
            if !reaches[p] {
                reaches[p] = true;
                queue.push_back(p);
            }
        }
    }
    if let Some(i) = reaches.iter().position(|r| !r) {
        let key = policy.nodes.keys().nth(i).expect("index in range");
        return Err(SolverError::Divergence(format!(
            "belief {:016x} never reaches a goal",
            key.digest()
        )));
    }

    let mut a = DMatrix::<f64>::identity(n, n);
    let mut c = DVector::<f64>::zeros(n);
    for (i, node) in policy.nodes.values().enumerate() {
        c[i] = node.expected_cost;
        for b in node.branches.iter().filter(|b| !b.goal) {
            a[(i, index[&b.successor])] -= b.probability;
        }
    }
    let v = a
        .lu()
        .solve(&c)
        .ok_or_else(|| SolverError::Divergence("singular policy system".into()))?;
    Ok(v[index[&policy.root]])
}

fn monte_carlo(
    policy: &PolicyGraph,
    model: &dyn GoalPomdp,
    rollouts: usize,
    seed: u64,
    max_steps: usize,
) -> Result<f64> {
    if rollouts == 0 {
        return Err(SolverError::Config(
            "monte-carlo needs at least one rollout".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = &policy.root_belief;
    let start_dist = WeightedIndex::new(start.particles().iter().map(|(_, p)| *p))
        .expect("canonical beliefs have positive weights");
    let mut total = 0.0;
    for _ in 0..rollouts {
        let mut state = start.particles()[start_dist.sample(&mut rng)].0;
        let mut key = &policy.root;
        let mut cost = 0.0;
        let mut steps = 0;
        loop {
            let node = &policy.nodes[key];
            let ctx = node.belief.observable();
            cost += model.cost(ctx, state, node.action);
            state = sample(&model.transition(ctx, state, node.action), &mut rng);
            let z = sample(&model.observation(ctx, state, node.action), &mut rng);
            let branch = node
                .branches
                .iter()
                .find(|b| b.observation == z)
                .ok_or_else(|| {
                    SolverError::OpenPolicy(format!("observation {z} has no branch in the policy"))
                })?;
            if branch.goal {
                break;
            }
            key = &branch.successor;
            steps += 1;
            if steps >= max_steps {
                return Err(SolverError::Divergence(format!(
                    "rollout exceeded {max_steps} steps"
                )));
            }
        }
        total += cost;
    }
    Ok(total / rollouts as f64)
}

fn sample<T: Copy>(outcomes: &[(T, f64)], rng: &mut ChaCha8Rng) -> T {
    let dist =
        WeightedIndex::new(outcomes.iter().map(|(_, p)| *p)).expect("model rows are distributions");
    outcomes[dist.sample(rng)].0
}
