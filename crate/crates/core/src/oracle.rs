//! Exhaustive value iteration over the reachable belief MDP.
//!
//! Deliberately shares no belief arithmetic with [`crate::belief::BeliefEngine`]:
//! updates are recomputed here from the raw model so the planners can be
//! checked against it.

use std::collections::{BTreeMap, VecDeque};

use thiserror::Error;

use crate::belief::{
    ActionId, BeliefState, GoalCriterion, GoalPomdp, Observable, ObservationId, StateId,
};

const PRUNE: f64 = 1e-12;
const BRANCH_MIN: f64 = 1e-12;
const KEY_RESOLUTION: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("more than {0} reachable beliefs")]
    TooLarge(usize),
    #[error("value iteration did not settle within {0} sweeps")]
    NoFixpoint(usize),
}

type Particles = Vec<(u32, f64)>;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
struct Key(Observable, Vec<(u32, i64)>);

fn key_of(ctx: Observable, particles: &[(u32, f64)]) -> Key {
    Key(
        ctx,
        particles
            .iter()
            .map(|&(s, p)| (s, (p / KEY_RESOLUTION).round() as i64))
            .collect(),
    )
}

fn normalize(mut acc: BTreeMap<u32, f64>) -> Option<Particles> {
    let total: f64 = acc.values().sum();
    if total <= 0.0 {
        return None;
    }
    acc.values_mut().for_each(|p| *p /= total);
    acc.retain(|_, p| *p >= PRUNE);
    let total: f64 = acc.values().sum();
    Some(acc.into_iter().map(|(s, p)| (s, p / total)).collect())
}

struct Outcome {
    cost: f64,
    /// `(probability, successor index or None for a goal belief)`.
    branches: Vec<(f64, Option<usize>)>,
}

/// Optimal values of every belief reachable from the initial belief.
#[derive(Debug, Clone)]
pub struct OracleSolution {
    index: BTreeMap<Key, usize>,
    values: Vec<f64>,
    q: Vec<BTreeMap<ActionId, f64>>,
    root: Option<usize>,
}

impl OracleSolution {
    /// `V*(b0)`.
    pub fn root_value(&self) -> f64 {
        self.root.map_or(0.0, |i| self.values[i])
    }

    /// Number of non-goal reachable beliefs.
    pub fn num_beliefs(&self) -> usize {
        self.values.len()
    }

    fn lookup(&self, b: &BeliefState) -> Option<usize> {
        let particles: Particles = b.particles().iter().map(|(s, p)| (s.0, *p)).collect();
        self.index.get(&key_of(b.observable(), &particles)).copied()
    }

    pub fn value(&self, b: &BeliefState) -> Option<f64> {
        self.lookup(b).map(|i| self.values[i])
    }

    /// `Q*(b, a)`; `None` for unknown beliefs or excluded actions.
    pub fn q_value(&self, b: &BeliefState, action: ActionId) -> Option<f64> {
        self.lookup(b).and_then(|i| self.q[i].get(&action).copied())
    }

    /// Every non-goal reachable belief with its optimal value.
    pub fn beliefs(&self) -> impl Iterator<Item = (BeliefState, f64)> + '_ {
        self.index.iter().map(|(k, &i)| {
            let raw =
                k.1.iter()
                    .map(|&(s, q)| (StateId(s), q as f64 * KEY_RESOLUTION));
            let b = BeliefState::canonicalize_with(k.0, raw).expect("stored beliefs are non-empty");
            (b, self.values[i])
        })
    }
}

/// Options for [`solve_exhaustive`].
#[derive(Debug, Clone)]
pub struct OracleConfig {
    pub max_beliefs: usize,
    pub tolerance: f64,
    pub max_sweeps: usize,
    /// Treat actions failing the validity oracle as unavailable.
    pub respect_validity: bool,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            max_beliefs: 200_000,
            tolerance: 1e-12,
            max_sweeps: 1_000_000,
            respect_validity: false,
        }
    }
}

struct Enumerator<'m> {
    model: &'m dyn GoalPomdp,
    cfg: &'m OracleConfig,
}

impl Enumerator<'_> {
    fn is_goal(&self, particles: &[(u32, f64)]) -> bool {
        match self.model.goal_criterion() {
            GoalCriterion::GoalStates => particles
                .iter()
                .all(|(s, _)| self.model.is_goal_state(StateId(*s))),
            GoalCriterion::Localized => particles.len() <= 1,
        }
    }

    fn available(&self, ctx: Observable, particles: &[(u32, f64)], a: ActionId) -> bool {
        particles.iter().all(|&(s, _)| {
            let s = StateId(s);
            self.model.is_applicable(ctx, s, a)
                && (!self.cfg.respect_validity || self.model.is_valid(ctx, s, a))
        })
    }

    fn step(
        &self,
        ctx: Observable,
        particles: &[(u32, f64)],
        a: ActionId,
    ) -> (f64, Vec<(f64, Observable, Particles)>) {
        let mut cost = 0.0;
        let mut joint: BTreeMap<ObservationId, BTreeMap<u32, f64>> = BTreeMap::new();
        for &(s, w) in particles {
            cost += w * self.model.cost(ctx, StateId(s), a);
            for (next, p) in self.model.transition(ctx, StateId(s), a) {
                for (z, q) in self.model.observation(ctx, next, a) {
                    if p * q * w > 0.0 {
                        *joint.entry(z).or_default().entry(next.0).or_default() += p * q * w;
                    }
                }
            }
        }
        let masses: Vec<f64> = joint.values().map(|m| m.values().sum()).collect();
        let kept: f64 = masses.iter().filter(|m| **m >= BRANCH_MIN).sum();
        let mut out = Vec::new();
        for ((z, m), mass) in joint.into_iter().zip(masses) {
            if mass < BRANCH_MIN {
                continue;
            }
            if let Some(b) = normalize(m) {
                out.push((mass / kept, self.model.next_observable(ctx, a, z), b));
            }
        }
        (cost, out)
    }
}

/// Enumerates every belief reachable from the initial belief under any
/// sequence of available actions and solves the Bellman equations.
pub fn solve_exhaustive(
    model: &dyn GoalPomdp,
    cfg: &OracleConfig,
) -> Result<OracleSolution, OracleError> {
    let e = Enumerator { model, cfg };
    let b0 = model.initial_belief();
    let root_ctx = b0.observable();
    let root: Particles = b0.particles().iter().map(|(s, p)| (s.0, *p)).collect();

    let mut index: BTreeMap<Key, usize> = BTreeMap::new();
    let mut nodes: Vec<(Observable, Particles)> = Vec::new();
    let mut outcomes: Vec<BTreeMap<ActionId, Outcome>> = Vec::new();
    let mut queue = VecDeque::new();
    let root_index = if e.is_goal(&root) {
        None
    } else {
        index.insert(key_of(root_ctx, &root), 0);
        nodes.push((root_ctx, root));
        queue.push_back(0);
        Some(0)
    };

    while let Some(i) = queue.pop_front() {
        let (ctx, particles) = nodes[i].clone();
        let mut per_action = BTreeMap::new();
        for a in (0..model.num_actions()).map(ActionId) {
            if !e.available(ctx, &particles, a) {
                continue;
            }
            let (cost, branches) = e.step(ctx, &particles, a);
            let mut resolved = Vec::with_capacity(branches.len());
            for (p, next_ctx, next) in branches {
                if e.is_goal(&next) {
                    resolved.push((p, None));
                    continue;
                }
                let k = key_of(next_ctx, &next);
                let j = match index.get(&k) {
                    Some(&j) => j,
                    None => {
                        if nodes.len() >= cfg.max_beliefs {
                            return Err(OracleError::TooLarge(cfg.max_beliefs));
                        }
                        let j = nodes.len();
                        index.insert(k, j);
                        nodes.push((next_ctx, next));
                        outcomes.push(BTreeMap::new());
                        queue.push_back(j);
                        j
                    }
                };
                resolved.push((p, Some(j)));
            }
            per_action.insert(
                a,
                Outcome {
                    cost,
                    branches: resolved,
                },
            );
        }
        if outcomes.len() <= i {
            outcomes.resize_with(i + 1, BTreeMap::new);
        }
        outcomes[i] = per_action;
    }
    let n = nodes.len();
    outcomes.resize_with(n, BTreeMap::new);

    // Actions that can still reach a goal with probability one: iteratively
    // drop beliefs with no goal path and actions that may enter them.
    let mut allowed: Vec<Vec<ActionId>> = outcomes
        .iter()
        .map(|o| o.keys().copied().collect())
        .collect();
    let mut dead = vec![false; n];
    loop {
        let mut reaches = vec![false; n];
        let mut changed = true;
        while changed {
            changed = false;
            for i in 0..n {
                if reaches[i] || dead[i] {
                    continue;
                }
                let ok = allowed[i].iter().any(|a| {
                    outcomes[i][a]
                        .branches
                        .iter()
                        .any(|(_, j)| j.is_none_or(|j| reaches[j]))
                });
                if ok {
                    reaches[i] = true;
                    changed = true;
                }
            }
        }
        let mut pruned = false;
        for i in 0..n {
            if !reaches[i] && !dead[i] {
                dead[i] = true;
                pruned = true;
            }
        }
        for i in 0..n {
            let before = allowed[i].len();
            allowed[i].retain(|a| {
                outcomes[i][a]
                    .branches
                    .iter()
                    .all(|(_, j)| j.is_none_or(|j| !dead[j]))
            });
            pruned |= allowed[i].len() != before;
        }
        if !pruned {
            break;
        }
    }

    let mut values: Vec<f64> = dead
        .iter()
        .map(|&d| if d { f64::INFINITY } else { 0.0 })
        .collect();
    let backup = |i: usize, a: &ActionId, values: &[f64]| {
        let o = &outcomes[i][a];
        o.cost
            + o.branches
                .iter()
                .map(|(p, j)| j.map_or(0.0, |j| p * values[j]))
                .sum::<f64>()
    };
    let mut settled = false;
    for _ in 0..cfg.max_sweeps {
        let mut residual: f64 = 0.0;
        for i in 0..n {
            if dead[i] {
                continue;
            }
            let v = allowed[i]
                .iter()
                .map(|a| backup(i, a, &values))
                .fold(f64::INFINITY, f64::min);
            residual = residual.max((v - values[i]).abs());
            values[i] = v;
        }
        if residual <= cfg.tolerance {
            settled = true;
            break;
        }
    }
    if !settled {
        return Err(OracleError::NoFixpoint(cfg.max_sweeps));
    }

    let q = (0..n)
        .map(|i| {
            outcomes[i]
                .keys()
                .map(|a| (*a, backup(i, a, &values)))
                .collect()
        })
        .collect();
    Ok(OracleSolution {
        index,
        values,
        q,
        root: root_index,
    })
}
