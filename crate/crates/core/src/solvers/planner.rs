use std::collections::{BTreeSet, HashMap, VecDeque};
use std::rc::Rc;
use std::time::{Duration, Instant};

use serde::Serialize;

use super::table::{Node, QEntry, QSource, QTable, Successor};
use super::{Result, SolverConfig, SolverError, SolverResult, ValidationMode};
use crate::belief::{ActionId, BeliefEngine, BeliefHeuristic, BeliefKey, BeliefState, QueryLedger};
use crate::estimators::Estimator;

/// Slack below which a value decrease is not counted as a monotonicity violation.
const MONOTONE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationRecord {
    pub key: BeliefKey,
    pub action: ActionId,
    /// Q-values of every action just before the evaluation; `None` for
    /// inapplicable actions.
    pub q_before: Vec<Option<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SolveStats {
    pub trials: u64,
    /// Beliefs whose Q-values were initialized.
    pub expansions: u64,
    /// Actions evaluated (belief transitions requested by the planner).
    pub evaluations: u64,
    /// LAO* main-loop passes.
    pub outer_iterations: u64,
    /// Full-horizon replanning rounds.
    pub replans: u64,
    pub improve_sweeps: u64,
    pub backups: u64,
    pub monotonicity_violations: u64,
    #[serde(skip)]
    pub evaluation_log: Vec<EvaluationRecord>,
}

/// Result of an ImproveValues call.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImproveOutcome {
    /// Residual below tolerance and no best action changed.
    Converged,
    /// A backup made an unevaluated action the argmin (lazy only).
    BestActionUnevaluated,
    /// Values converged but some best action changed.
    PolicyChanged,
    /// Sweep cap reached before the residual dropped below tolerance.
    Unconverged,
}

/// Greedy partial solution graph reachable from the root.
#[derive(Debug, Default)]
pub(crate) struct SolutionGraph {
    /// Initialized interior nodes in BFS order with their depth.
    pub interior: Vec<(BeliefKey, usize)>,
    /// Non-terminal tips: uninitialized beliefs or beliefs whose best action
    /// is unevaluated.
    pub tips: Vec<(BeliefKey, BeliefState, usize)>,
    pub parents: HashMap<BeliefKey, Vec<BeliefKey>>,
}

/// Shared state of one solve: Q-table, blacklist, counters.
pub struct Planner<'a, 'm> {
    pub(crate) engine: &'a BeliefEngine<'m>,
    heuristic: &'a dyn BeliefHeuristic,
    estimator: Option<&'a Estimator>,
    pub(crate) config: SolverConfig,
    pub(crate) table: QTable,
    pub(crate) blacklist: BTreeSet<(BeliefKey, ActionId)>,
    pub(crate) validity: HashMap<(BeliefKey, ActionId), bool>,
    pub(crate) stats: SolveStats,
    pub(crate) root: BeliefState,
    pub(crate) root_key: BeliefKey,
    ledger_at_start: QueryLedger,
    started: Instant,
    deadline: Option<Instant>,
}

impl<'a, 'm> Planner<'a, 'm> {
    /// Vanilla planner when `estimator` is `None`, lazy otherwise.
    pub fn new(
        engine: &'a BeliefEngine<'m>,
        heuristic: &'a dyn BeliefHeuristic,
        estimator: Option<&'a Estimator>,
        config: SolverConfig,
    ) -> Result<Self> {
        config.validate()?;
        let root = engine.model().initial_belief();
        let started = Instant::now();
        Ok(Planner {
            engine,
            heuristic,
            estimator,
            root_key: root.key(),
            root,
            table: QTable::default(),
            blacklist: BTreeSet::new(),
            validity: HashMap::new(),
            stats: SolveStats::default(),
            ledger_at_start: engine.ledger(),
            deadline: config
                .timeout_secs
                .map(|t| started + Duration::from_secs_f64(t)),
            started,
            config,
        })
    }

    /// Plans from `root` instead of the model's initial belief.
    pub fn with_root(mut self, root: BeliefState) -> Self {
        self.root_key = root.key();
        self.root = root;
        self
    }

    pub fn is_lazy(&self) -> bool {
        self.estimator.is_some()
    }

    pub fn table(&self) -> &QTable {
        &self.table
    }

    pub fn stats(&self) -> &SolveStats {
        &self.stats
    }

    pub fn root(&self) -> &BeliefState {
        &self.root
    }

    pub(crate) fn out_of_time(&self) -> bool {
        self.deadline.is_some_and(|d| Instant::now() >= d)
    }

    pub(crate) fn root_value(&self) -> f64 {
        if self.engine.is_goal_belief(&self.root) {
            0.0
        } else {
            self.table
                .value(&self.root_key)
                .unwrap_or_else(|| self.initial_value(&self.root))
        }
    }

    fn initial_value(&self, b: &BeliefState) -> f64 {
        self.heuristic.value(b) * self.config.inflation
    }

    fn leaf_value(&self, s: &Successor) -> f64 {
        if s.goal {
            0.0
        } else {
            self.table.value(&s.key).unwrap_or(s.heuristic)
        }
    }

    fn set_value(&mut self, key: &BeliefKey, value: f64) {
        let node = self.table.get_mut(key).expect("node exists");
        if value < node.value - MONOTONE_SLACK * node.value.abs().max(1.0) {
            self.stats.monotonicity_violations += 1;
        }
        node.value = value;
    }

    fn node(&self, key: &BeliefKey) -> &Node {
        self.table.get(key).expect("node exists")
    }

    /// Creates the Q-table row for `b`. Vanilla planners evaluate every
    /// applicable action; lazy planners set estimator values instead (a
    /// belief with a single applicable action is evaluated directly).
    pub(crate) fn ensure_initialized(&mut self, key: &BeliefKey, b: &BeliefState) -> Result<()> {
        if self.table.contains(key) {
            return Ok(());
        }
        let num_actions = self.engine.model().num_actions();
        let applicable: Vec<bool> = (0..num_actions)
            .map(|a| {
                let a = ActionId(a);
                !self.blacklist.contains(&(key.clone(), a)) && self.engine.is_applicable(b, a)
            })
            .collect();
        let lazy_estimates = self.is_lazy() && applicable.iter().filter(|x| **x).count() > 1;
        let mut entries = Vec::with_capacity(num_actions);
        for (a, &ok) in applicable.iter().enumerate() {
            if !ok {
                entries.push(QEntry::inapplicable());
            } else if lazy_estimates {
                let est = self
                    .estimator
                    .expect("lazy planner has an estimator")
                    .estimate(self.engine, b, key, ActionId(a))?;
                entries.push(QEntry::pending(
                    est * self.config.inflation,
                    QSource::Estimator,
                ));
            } else {
                entries.push(QEntry::pending(0.0, QSource::HeuristicLookahead));
            }
        }
        let value = self.initial_value(b);
        self.table.insert(
            key.clone(),
            Node {
                belief: b.clone(),
                value,
                entries,
            },
        );
        self.stats.expansions += 1;
        if !lazy_estimates {
            for (a, &ok) in applicable.iter().enumerate() {
                if ok {
                    self.evaluate(key, ActionId(a))?;
                }
            }
            self.update_q(key, QSource::HeuristicLookahead);
        }
        Ok(())
    }

    /// Computes the belief transition of `action` at `key`. Returns false
    /// when eager validation rejects the action (which becomes inapplicable).
    pub(crate) fn evaluate(&mut self, key: &BeliefKey, action: ActionId) -> Result<bool> {
        let belief = self.node(key).belief.clone();
        if self.config.validation == ValidationMode::Eager
            && !self.check_valid(key, &belief, action)
        {
            let entry = &mut self.table.get_mut(key).expect("node exists").entries[action.0];
            *entry = QEntry::inapplicable();
            return Ok(false);
        }
        if self.config.record_evaluations {
            let q_before = self
                .node(key)
                .entries
                .iter()
                .map(|e| e.applicable.then_some(e.q))
                .collect();
            self.stats.evaluation_log.push(EvaluationRecord {
                key: key.clone(),
                action,
                q_before,
            });
        }
        let transition = self.engine.compute_keyed(key, &belief, action)?;
        let successors: Vec<Successor> = transition
            .branches
            .iter()
            .enumerate()
            .map(|(i, br)| {
                let goal = self.engine.is_goal_belief(&br.successor);
                Successor {
                    key: br.successor.key(),
                    probability: br.probability,
                    goal,
                    heuristic: if goal {
                        0.0
                    } else {
                        self.initial_value(&br.successor)
                    },
                    branch: i,
                }
            })
            .collect();
        let entry = &mut self.table.get_mut(key).expect("node exists").entries[action.0];
        entry.evaluated = true;
        entry.transition = Some(transition);
        entry.successors = Rc::from(successors);
        self.stats.evaluations += 1;
        Ok(true)
    }

    /// Memoized conjunction of per-state validity over the support.
    pub(crate) fn check_valid(
        &mut self,
        key: &BeliefKey,
        b: &BeliefState,
        action: ActionId,
    ) -> bool {
        if let Some(v) = self.validity.get(&(key.clone(), action)) {
            return *v;
        }
        let v = self.engine.check_validity(b, action);
        self.validity.insert((key.clone(), action), v);
        v
    }

    fn lookahead(&self, entry: &QEntry) -> f64 {
        let cost = entry.transition().expect("evaluated").expected_cost;
        cost + entry
            .successors
            .iter()
            .map(|s| s.probability * self.leaf_value(s))
            .sum::<f64>()
    }

    /// Recomputes `Q(b, a)` for every evaluated applicable action.
    pub(crate) fn update_q(&mut self, key: &BeliefKey, source: QSource) {
        let node = self.node(key);
        let fresh: Vec<Option<f64>> = node
            .entries
            .iter()
            .map(|e| (e.applicable && e.evaluated).then(|| self.lookahead(e)))
            .collect();
        let node = self.table.get_mut(key).expect("node exists");
        for (entry, q) in node.entries.iter_mut().zip(fresh) {
            if let Some(q) = q {
                entry.q = q;
                entry.source = source;
            }
        }
        self.stats.backups += 1;
    }

    /// Settles the value of an initialized belief and returns its best action.
    ///
    /// Lazy: select the argmin, evaluate it if needed, update, and repeat
    /// until the argmin is stable under its own update. Vanilla: a full
    /// backup over all (evaluated) actions.
    pub(crate) fn settle(&mut self, key: &BeliefKey) -> Result<Option<ActionId>> {
        if self.is_lazy() {
            loop {
                let Some(a) = self.node(key).best_action() else {
                    self.set_value(key, f64::INFINITY);
                    return Ok(None);
                };
                if !self.node(key).entry(a).evaluated && !self.evaluate(key, a)? {
                    continue;
                }
                self.update_q(key, QSource::Backup);
                if self.node(key).best_action() == Some(a) {
                    let q = self.node(key).entry(a).q;
                    self.set_value(key, q);
                    return Ok(Some(a));
                }
            }
        }
        let pending: Vec<ActionId> = self
            .node(key)
            .entries
            .iter()
            .enumerate()
            .filter(|(_, e)| e.applicable && !e.evaluated)
            .map(|(a, _)| ActionId(a))
            .collect();
        for a in pending {
            self.evaluate(key, a)?;
        }
        self.update_q(key, QSource::Backup);
        let best = self.node(key).best_action();
        let v = best.map_or(f64::INFINITY, |a| self.node(key).entry(a).q);
        self.set_value(key, v);
        Ok(best)
    }

    /// Bellman sweeps over `keys` (in the given order) until the residual is
    /// at most the tolerance. With `lazy_aware`, stops as soon as some
    /// belief's argmin is an unevaluated action.
    pub fn improve_values(&mut self, keys: &[BeliefKey], lazy_aware: bool) -> ImproveOutcome {
        let before: Vec<Option<ActionId>> = keys
            .iter()
            .map(|k| self.table.get(k).and_then(Node::best_action))
            .collect();
        let mut converged = false;
        for _ in 0..self.config.max_sweeps {
            self.stats.improve_sweeps += 1;
            let mut residual: f64 = 0.0;
            for key in keys {
                if !self.table.contains(key) {
                    continue;
                }
                self.update_q(key, QSource::Backup);
                let node = self.node(key);
                let Some(a) = node.best_action() else {
                    // Every action was blacklisted: no valid way out.
                    if node.value != f64::INFINITY {
                        self.set_value(key, f64::INFINITY);
                        residual = f64::INFINITY;
                    }
                    continue;
                };
                if lazy_aware && !node.entry(a).evaluated {
                    return ImproveOutcome::BestActionUnevaluated;
                }
                let (old, new) = (node.value, node.entry(a).q);
                let diff = if old == new { 0.0 } else { (new - old).abs() };
                residual = residual.max(diff);
                self.set_value(key, new);
            }
            if residual <= self.config.epsilon_residual {
                converged = true;
                break;
            }
        }
        if !converged {
            return ImproveOutcome::Unconverged;
        }
        let after = keys
            .iter()
            .map(|k| self.table.get(k).and_then(Node::best_action));
        if before.into_iter().eq(after) {
            ImproveOutcome::Converged
        } else {
            ImproveOutcome::PolicyChanged
        }
    }

    /// BFS over best actions from the root.
    pub(crate) fn solution_graph(&self) -> SolutionGraph {
        let mut g = SolutionGraph::default();
        if self.engine.is_goal_belief(&self.root) {
            return g;
        }
        let mut seen: BTreeSet<BeliefKey> = BTreeSet::new();
        let mut queue = VecDeque::new();
        seen.insert(self.root_key.clone());
        queue.push_back((self.root_key.clone(), None::<BeliefState>, 0usize));
        while let Some((key, belief, depth)) = queue.pop_front() {
            let Some(node) = self.table.get(&key) else {
                let b = belief.unwrap_or_else(|| self.root.clone());
                g.tips.push((key, b, depth));
                continue;
            };
            let Some(a) = node.best_action() else {
                // Dead end: kept so value improvement can raise it to infinity.
                g.interior.push((key, depth));
                continue;
            };
            let entry = node.entry(a);
            if !entry.evaluated {
                g.tips.push((key, node.belief.clone(), depth));
                continue;
            }
            g.interior.push((key.clone(), depth));
            let t = entry.transition().expect("evaluated");
            for s in entry.successors.iter() {
                if s.goal {
                    continue;
                }
                g.parents
                    .entry(s.key.clone())
                    .or_default()
                    .push(key.clone());
                if seen.insert(s.key.clone()) {
                    let b = (!self.table.contains(&s.key))
                        .then(|| t.branches[s.branch].successor.clone());
                    queue.push_back((s.key.clone(), b, depth + 1));
                }
            }
        }
        g
    }

    /// True when the greedy policy from the root, taken over freshly
    /// recomputed Q-values, is closed, uses only evaluated actions, and moves
    /// no value by more than the tolerance. Does not modify the table.
    pub(crate) fn greedy_converged(&self) -> bool {
        if self.engine.is_goal_belief(&self.root) {
            return true;
        }
        let mut seen: BTreeSet<BeliefKey> = BTreeSet::from([self.root_key.clone()]);
        let mut queue = VecDeque::from([self.root_key.clone()]);
        while let Some(key) = queue.pop_front() {
            let Some(node) = self.table.get(&key) else {
                return false;
            };
            let mut best: Option<(f64, &QEntry)> = None;
            for e in node.entries.iter().filter(|e| e.applicable) {
                let q = if e.evaluated { self.lookahead(e) } else { e.q };
                if best.is_none_or(|(bq, _)| q < bq) {
                    best = Some((q, e));
                }
            }
            let Some((q, entry)) = best else {
                continue;
            };
            if !entry.evaluated {
                return false;
            }
            let diff = if q == node.value {
                0.0
            } else {
                (q - node.value).abs()
            };
            if diff > self.config.epsilon_residual {
                return false;
            }
            for s in entry.successors.iter() {
                if !s.goal && seen.insert(s.key.clone()) {
                    queue.push_back(s.key.clone());
                }
            }
        }
        true
    }

    /// Removes `action` at `key` from consideration; its cached transition
    /// is dropped.
    pub(crate) fn blacklist(&mut self, key: &BeliefKey, action: ActionId) {
        self.blacklist.insert((key.clone(), action));
        self.engine.forget_transition(key, action);
        if let Some(node) = self.table.get_mut(key) {
            node.entries[action.0] = QEntry::inapplicable();
        }
    }

    /// Forgets all values and cached transitions; the blacklist and the
    /// validity memo survive.
    pub(crate) fn reset(&mut self) {
        self.table.clear();
        self.engine.clear_cache();
    }

    pub(crate) fn finish(&self, converged: bool) -> SolverResult {
        let (policy, policy_error) = match self.extract_policy() {
            Ok(p) => (Some(p), None),
            Err(e) => (None, Some(e.to_string())),
        };
        SolverResult {
            value: self.root_value(),
            policy,
            policy_error,
            ledger: self.engine.ledger().since(&self.ledger_at_start),
            stats: self.stats.clone(),
            wall_time: self.started.elapsed(),
            converged,
        }
    }

    pub(crate) fn require_finite_root(&self) -> Result<()> {
        if self.root_value().is_finite() {
            Ok(())
        } else {
            Err(SolverError::NoValidPolicy)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::belief::{ExpectedStateHeuristic, ZeroHeuristic};
    use crate::domains::{corridor, line_world};
    use crate::estimators::{EstimatorConfig, EstimatorKind};

    #[test]
    fn single_goal_step_converges_in_one_backup() {
        let m = corridor(1);
        let e = BeliefEngine::new(&m);
        let h = ExpectedStateHeuristic(m.dist_table());
        let mut p = Planner::new(&e, &h, None, SolverConfig::default()).unwrap();
        let (root, key) = (p.root.clone(), p.root_key.clone());
        p.ensure_initialized(&key, &root).unwrap();
        let backups = p.stats.backups;
        assert_eq!(
            p.improve_values(std::slice::from_ref(&key), false),
            ImproveOutcome::Converged
        );
        assert_eq!(p.stats.backups - backups, 1);
        assert_eq!(p.table.value(&key), Some(1.0));
    }

    #[test]
    fn lazy_aware_stops_at_unevaluated_argmin() {
        let m = line_world();
        let e = BeliefEngine::new(&m);
        let h = ExpectedStateHeuristic(m.dist_table());
        let est = Estimator::new(EstimatorConfig::new(EstimatorKind::Qmdp))
            .unwrap()
            .with_state_heuristic(m.dist_table());
        let mut p = Planner::new(&e, &h, Some(&est), SolverConfig::default()).unwrap();
        let (root, key) = (p.root.clone(), p.root_key.clone());
        p.ensure_initialized(&key, &root).unwrap();
        assert_eq!(
            p.improve_values(std::slice::from_ref(&key), true),
            ImproveOutcome::BestActionUnevaluated
        );
        assert_eq!(p.stats.evaluations, 0);
    }

    #[test]
    fn two_node_chain_from_high_values() {
        let m = corridor(2);
        let e = BeliefEngine::new(&m);
        let mut p = Planner::new(&e, &ZeroHeuristic, None, SolverConfig::default()).unwrap();
        let (b0, k0) = (p.root.clone(), p.root_key.clone());
        p.ensure_initialized(&k0, &b0).unwrap();
        let b1 = e.belief_after_action(&b0, ActionId(0)).unwrap();
        let k1 = b1.key();
        p.ensure_initialized(&k1, &b1).unwrap();
        p.set_value(&k0, 50.0);
        p.set_value(&k1, 50.0);
        let sweeps = p.stats.improve_sweeps;
        assert_eq!(
            p.improve_values(&[k1.clone(), k0.clone()], false),
            ImproveOutcome::Converged
        );
        assert!(p.stats.improve_sweeps - sweeps <= 2);
        assert_eq!(p.table.value(&k0), Some(2.0));
        assert_eq!(p.table.value(&k1), Some(1.0));
    }
}
