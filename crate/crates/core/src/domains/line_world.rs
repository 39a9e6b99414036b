//! Line-world and single-action corridors: tiny domains with known values.

use std::sync::Arc;

use super::dist::DistTable;
use crate::belief::{ActionId, BeliefState, GoalPomdp, Observable, ObservationId, StateId};

pub const LEFT: ActionId = ActionId(0);
pub const RIGHT: ActionId = ActionId(1);

/// States `0..len` on a line, goal at the right end. `Left`/`Right` move one
/// cell (clamped) at unit cost; the only observation is the goal indicator.
#[derive(Debug, Clone)]
pub struct LineWorld {
    len: u32,
    actions: usize,
    start: Vec<u32>,
    dist: Arc<DistTable>,
}

/// States `{0..4}`, `G = {4}`, `b0` uniform over `{0, 1, 2}`.
pub fn line_world() -> LineWorld {
    LineWorld::new(5, 2, vec![0, 1, 2])
}

/// Deterministic corridor of `length` unit steps with a single action
/// (`Right`, exposed as action 0).
pub fn corridor(length: u32) -> LineWorld {
    LineWorld::new(length + 1, 1, vec![0])
}

impl LineWorld {
    fn new(len: u32, actions: usize, start: Vec<u32>) -> Self {
        let goal = len - 1;
        let dist = (0..len).map(|s| (goal - s) as f64).collect();
        LineWorld {
            len,
            actions,
            start,
            dist: Arc::new(DistTable::from_values(dist)),
        }
    }

    /// Same dynamics with a custom start hypothesis set.
    pub fn with_start(mut self, start: Vec<u32>) -> Self {
        self.start = start;
        self
    }

    pub fn goal(&self) -> StateId {
        StateId(self.len - 1)
    }

    /// `dist(s, G)`; exact cost-to-go for the fully observable chain.
    pub fn dist_table(&self) -> Arc<DistTable> {
        Arc::clone(&self.dist)
    }

    fn moves_right(&self, action: ActionId) -> bool {
        self.actions == 1 || action == RIGHT
    }
}

impl GoalPomdp for LineWorld {
    fn num_states(&self) -> usize {
        self.len as usize
    }

    fn num_actions(&self) -> usize {
        self.actions
    }

    fn action_name(&self, action: ActionId) -> String {
        if self.moves_right(action) {
            "right"
        } else {
            "left"
        }
        .into()
    }

    fn initial_belief(&self) -> BeliefState {
        BeliefState::uniform(self.start.iter().map(|s| StateId(*s))).expect("non-empty start set")
    }

    fn is_goal_state(&self, state: StateId) -> bool {
        state == self.goal()
    }

    fn transition(&self, _: Observable, state: StateId, action: ActionId) -> Vec<(StateId, f64)> {
        if self.is_goal_state(state) {
            return vec![(state, 1.0)];
        }
        let next = if self.moves_right(action) {
            (state.0 + 1).min(self.len - 1)
        } else {
            state.0.saturating_sub(1)
        };
        vec![(StateId(next), 1.0)]
    }

    fn observation(&self, _: Observable, next: StateId, _: ActionId) -> Vec<(ObservationId, f64)> {
        if self.is_goal_state(next) {
            vec![(ObservationId::GOAL, 1.0)]
        } else {
            vec![(ObservationId::from_code(0), 1.0)]
        }
    }

    fn cost(&self, _: Observable, state: StateId, _: ActionId) -> f64 {
        if self.is_goal_state(state) {
            0.0
        } else {
            1.0
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::belief::BeliefEngine;

    #[test]
    fn shift_right_is_deterministic() {
        let w = line_world();
        let engine = BeliefEngine::new(&w);
        let b_a = engine
            .belief_after_action(&w.initial_belief(), RIGHT)
            .unwrap();
        let expected = BeliefState::uniform([1, 2, 3].map(StateId)).unwrap();
        assert_eq!(b_a, expected);
    }

    #[test]
    fn goal_is_absorbing_and_free() {
        let w = line_world();
        let engine = BeliefEngine::new(&w);
        let g = BeliefState::certain(w.goal());
        for a in [LEFT, RIGHT] {
            assert_eq!(engine.belief_after_action(&g, a).unwrap(), g);
            assert_eq!(engine.expected_cost(&g, a), 0.0);
        }
    }

    #[test]
    fn left_clamps_at_zero() {
        let w = line_world();
        assert_eq!(
            w.transition(None, StateId(0), LEFT),
            vec![(StateId(0), 1.0)]
        );
    }

    #[test]
    fn heuristic_at_start_is_three() {
        let w = line_world();
        let h = w.dist_table();
        let b0 = w.initial_belief();
        let v: f64 = b0.particles().iter().map(|(s, p)| p * h.get(*s)).sum();
        assert!((v - 3.0).abs() < 1e-12);
    }
}
