//! State-level cost-to-goal tables for heuristics and the Q^MDP estimator.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::belief::{StateHeuristic, StateId};

/// Shortest-path cost to the goal set on the optimistic determinization of
/// a transition model: every stochastic outcome is a choosable edge.
#[derive(Debug, Clone, PartialEq)]
pub struct DistTable {
    dist: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Key(f64);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl DistTable {
    /// Single backward uniform-cost sweep from the goal states.
    ///
    /// `edges(s)` lists `(cost, outcomes)` for every action applicable at
    /// the non-goal state `s`.
    pub fn backward_sweep<E>(num_states: usize, goals: &[StateId], edges: E) -> Self
    where
        E: Fn(StateId) -> Vec<(f64, Vec<StateId>)>,
    {
        let mut reverse: Vec<Vec<(u32, f64)>> = vec![Vec::new(); num_states];
        let mut is_goal = vec![false; num_states];
        for g in goals {
            is_goal[g.index()] = true;
        }
        for (s, &goal) in is_goal.iter().enumerate() {
            if goal {
                continue;
            }
            for (cost, outcomes) in edges(StateId(s as u32)) {
                for next in outcomes {
                    reverse[next.index()].push((s as u32, cost));
                }
            }
        }
        let mut dist = vec![f64::INFINITY; num_states];
        let mut heap = BinaryHeap::new();
        for g in goals {
            dist[g.index()] = 0.0;
            heap.push(Reverse((Key(0.0), g.0)));
        }
        while let Some(Reverse((Key(d), s))) = heap.pop() {
            if d > dist[s as usize] {
                continue;
            }
            for &(pred, cost) in &reverse[s as usize] {
                let nd = d + cost;
                if nd < dist[pred as usize] {
                    dist[pred as usize] = nd;
                    heap.push(Reverse((Key(nd), pred)));
                }
            }
        }
        DistTable { dist }
    }

    pub fn from_values(dist: Vec<f64>) -> Self {
        DistTable { dist }
    }

    pub fn get(&self, state: StateId) -> f64 {
        self.dist[state.index()]
    }

    pub fn values(&self) -> &[f64] {
        &self.dist
    }
}

impl StateHeuristic for DistTable {
    fn state_value(&self, state: StateId) -> f64 {
        self.get(state)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chooses_best_outcome() {
        // 0 -a-> {1, 2} cost 1; 1 -> 3 cost 5; 2 -> 3 cost 1; goal 3.
        let t = DistTable::backward_sweep(4, &[StateId(3)], |s| match s.0 {
            0 => vec![(1.0, vec![StateId(1), StateId(2)])],
            1 => vec![(5.0, vec![StateId(3)])],
            2 => vec![(1.0, vec![StateId(3)])],
            _ => vec![],
        });
        assert_eq!(t.values(), &[2.0, 5.0, 1.0, 0.0]);
    }

    #[test]
    fn unreachable_is_infinite() {
        let t = DistTable::backward_sweep(2, &[StateId(0)], |_| vec![]);
        assert!(t.get(StateId(1)).is_infinite());
    }
}
