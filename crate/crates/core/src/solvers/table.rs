use std::collections::HashMap;
use std::rc::Rc;

use serde::Serialize;

use crate::belief::{ActionId, BeliefKey, BeliefState, BeliefTransition};

/// Where the current `Q(b, a)` came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum QSource {
    /// First one-step lookahead after evaluating the action.
    HeuristicLookahead,
    /// Estimator value; the action has not been evaluated yet.
    Estimator,
    /// Bellman backup over the cached transition.
    Backup,
}

/// Successor of an evaluated action, with its lookup key precomputed.
#[derive(Debug, Clone)]
pub(crate) struct Successor {
    pub key: BeliefKey,
    pub probability: f64,
    pub goal: bool,
    /// Inflated heuristic value used while the successor is uninitialized.
    pub heuristic: f64,
    /// Index into the transition's branch list.
    pub branch: usize,
}

#[derive(Debug, Clone)]
pub struct QEntry {
    pub q: f64,
    pub evaluated: bool,
    pub source: QSource,
    /// False when the action is structurally inapplicable, failed validation
    /// or was blacklisted at this belief.
    pub applicable: bool,
    pub(crate) transition: Option<Rc<BeliefTransition>>,
    pub(crate) successors: Rc<[Successor]>,
}

impl QEntry {
    pub(crate) fn inapplicable() -> Self {
        QEntry {
            q: f64::INFINITY,
            evaluated: false,
            source: QSource::Backup,
            applicable: false,
            transition: None,
            successors: Rc::from(Vec::new()),
        }
    }

    pub(crate) fn pending(q: f64, source: QSource) -> Self {
        QEntry {
            q,
            evaluated: false,
            source,
            applicable: true,
            transition: None,
            successors: Rc::from(Vec::new()),
        }
    }

    pub fn transition(&self) -> Option<&BeliefTransition> {
        self.transition.as_deref()
    }
}

#[derive(Debug, Clone)]
pub struct Node {
    pub belief: BeliefState,
    pub value: f64,
    pub entries: Vec<QEntry>,
}

impl Node {
    /// Applicable action with the lowest Q-value; the lowest id wins ties.
    pub fn best_action(&self) -> Option<ActionId> {
        let mut best: Option<(usize, f64)> = None;
        for (i, e) in self.entries.iter().enumerate() {
            if !e.applicable {
                continue;
            }
            match best {
                Some((_, q)) if e.q >= q => {}
                _ => best = Some((i, e.q)),
            }
        }
        best.map(|(i, _)| ActionId(i))
    }

    pub fn entry(&self, action: ActionId) -> &QEntry {
        &self.entries[action.0]
    }

    pub fn any_evaluated(&self) -> bool {
        self.entries.iter().any(|e| e.evaluated)
    }
}

/// Per-belief Q-values. Only looked up by key, never iterated for decisions.
#[derive(Debug, Default)]
pub struct QTable {
    nodes: HashMap<BeliefKey, Node>,
}

impl QTable {
    pub fn get(&self, key: &BeliefKey) -> Option<&Node> {
        self.nodes.get(key)
    }

    pub(crate) fn get_mut(&mut self, key: &BeliefKey) -> Option<&mut Node> {
        self.nodes.get_mut(key)
    }

    pub(crate) fn insert(&mut self, key: BeliefKey, node: Node) {
        self.nodes.insert(key, node);
    }

    pub fn contains(&self, key: &BeliefKey) -> bool {
        self.nodes.contains_key(key)
    }

    pub fn value(&self, key: &BeliefKey) -> Option<f64> {
        self.nodes.get(key).map(|n| n.value)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub(crate) fn clear(&mut self) {
        self.nodes.clear();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::belief::StateId;

    #[test]
    fn argmin_prefers_lowest_id_on_ties() {
        let node = Node {
            belief: BeliefState::certain(StateId(0)),
            value: 0.0,
            entries: vec![
                QEntry::inapplicable(),
                QEntry::pending(2.0, QSource::Estimator),
                QEntry::pending(1.0, QSource::Estimator),
                QEntry::pending(1.0, QSource::Estimator),
            ],
        };
        assert_eq!(node.best_action(), Some(ActionId(2)));
        let dead = Node {
            belief: BeliefState::certain(StateId(0)),
            value: 0.0,
            entries: vec![QEntry::inapplicable()],
        };
        assert_eq!(dead.best_action(), None);
    }
}
