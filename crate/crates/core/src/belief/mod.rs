//! Belief-state representation and exact Bayesian belief transitions.
//!
//! A belief is a finite, canonical particle distribution over [`StateId`]s,
//! optionally paired with a fully observable component (for example the
//! robot cell in the contact domain). Every model query made while computing
//! belief transitions is routed through a [`BeliefEngine`], which keeps the
//! per-solve [`QueryLedger`] and the `(BeliefKey, ActionId)` transition cache.

mod engine;
mod model;

pub use engine::BeliefEngine;
pub use model::{
    BeliefHeuristic, ExpectedStateHeuristic, GoalCriterion, GoalPomdp, HypothesisCount, Observable,
    StateHeuristic, ZeroHeuristic,
};

use std::cmp::Ordering;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

/// Particles lighter than this are removed during canonicalization.
pub const PRUNE_THRESHOLD: f64 = 1e-12;

/// Observation branches lighter than this are dropped from a transition.
pub const BRANCH_THRESHOLD: f64 = 1e-12;

/// Probability resolution used when building [`BeliefKey`]s.
pub const KEY_RESOLUTION: f64 = 1e-9;

/// Tolerance for "sums to one" checks on distributions.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BeliefError {
    #[error("invalid belief: {0}")]
    InvalidBelief(String),

    #[error("domain model error: {0}")]
    DomainModel(String),

    #[error("observation {0} has zero probability under the predicted belief")]
    ZeroProbabilityObservation(ObservationId),

    #[error("belief transition requested from a goal belief")]
    GoalBelief,

    #[error("all observation branches vanished numerically")]
    NoObservationBranches,
}

pub type Result<T> = std::result::Result<T, BeliefError>;

/// Identifier of a domain state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct StateId(pub u32);

impl StateId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for StateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s{}", self.0)
    }
}

/// Index into a domain's finite action set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct ActionId(pub usize);

impl ActionId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for ActionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "a{}", self.0)
    }
}

/// Observation identifier. [`ObservationId::GOAL`] is emitted exactly by goal states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct ObservationId(pub u64);

impl ObservationId {
    pub const GOAL: ObservationId = ObservationId(0);

    /// Wraps a domain-specific observation code, keeping `GOAL` reserved.
    pub fn from_code(code: u64) -> Self {
        ObservationId(code + 1)
    }

    /// Inverse of [`ObservationId::from_code`]; `None` for the goal observation.
    pub fn code(self) -> Option<u64> {
        self.0.checked_sub(1)
    }

    pub fn is_goal(self) -> bool {
        self == Self::GOAL
    }
}

impl fmt::Display for ObservationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_goal() {
            write!(f, "z_g")
        } else {
            write!(f, "z{}", self.0 - 1)
        }
    }
}

/// Finite weighted particle distribution in canonical form.
///
/// Particles are sorted by state id without duplicates, every weight is at
/// least [`PRUNE_THRESHOLD`], and the weights sum to one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BeliefState {
    observable: Observable,
    particles: Vec<(StateId, f64)>,
}

impl BeliefState {
    /// Builds a canonical belief from raw weighted particles.
    pub fn canonicalize(raw: impl IntoIterator<Item = (StateId, f64)>) -> Result<Self> {
        Self::canonicalize_with(None, raw)
    }

    /// As [`BeliefState::canonicalize`], attaching an observable component.
    pub fn canonicalize_with(
        observable: Observable,
        raw: impl IntoIterator<Item = (StateId, f64)>,
    ) -> Result<Self> {
        let mut particles: Vec<(StateId, f64)> = raw.into_iter().collect();
        if particles.iter().any(|(_, w)| !w.is_finite()) {
            return Err(BeliefError::InvalidBelief("non-finite weight".into()));
        }
        if particles.iter().any(|(_, w)| *w < 0.0) {
            return Err(BeliefError::InvalidBelief("negative weight".into()));
        }
        particles.sort_by_key(|(s, _)| *s);
        let mut merged: Vec<(StateId, f64)> = Vec::with_capacity(particles.len());
        for (s, w) in particles {
            match merged.last_mut() {
                Some((last, acc)) if *last == s => *acc += w,
                _ => merged.push((s, w)),
            }
        }
        let total: f64 = merged.iter().map(|(_, w)| w).sum();
        if total <= 0.0 {
            return Err(BeliefError::InvalidBelief("total weight is zero".into()));
        }
        for (_, w) in merged.iter_mut() {
            *w /= total;
        }
        merged.retain(|(_, w)| *w >= PRUNE_THRESHOLD);
        let total: f64 = merged.iter().map(|(_, w)| w).sum();
        for (_, w) in merged.iter_mut() {
            *w /= total;
        }
        Ok(BeliefState {
            observable,
            particles: merged,
        })
    }

    /// Point-mass belief.
    pub fn certain(state: StateId) -> Self {
        BeliefState {
            observable: None,
            particles: vec![(state, 1.0)],
        }
    }

    /// Uniform belief over a hypothesis set.
    pub fn uniform(states: impl IntoIterator<Item = StateId>) -> Result<Self> {
        Self::canonicalize(states.into_iter().map(|s| (s, 1.0)))
    }

    pub fn with_observable(mut self, observable: Observable) -> Self {
        self.observable = observable;
        self
    }

    pub fn observable(&self) -> Observable {
        self.observable
    }

    pub fn particles(&self) -> &[(StateId, f64)] {
        &self.particles
    }

    pub fn states(&self) -> impl Iterator<Item = StateId> + '_ {
        self.particles.iter().map(|(s, _)| *s)
    }

    pub fn support_size(&self) -> usize {
        self.particles.len()
    }

    pub fn probability(&self, state: StateId) -> f64 {
        self.particles
            .binary_search_by_key(&state, |(s, _)| *s)
            .map(|i| self.particles[i].1)
            .unwrap_or(0.0)
    }

    /// True when all weights are equal, i.e. an unweighted hypothesis set.
    pub fn is_unweighted(&self) -> bool {
        let uniform = 1.0 / self.particles.len() as f64;
        self.particles
            .iter()
            .all(|(_, w)| (w - uniform).abs() <= NORMALIZATION_TOLERANCE)
    }

    pub fn total_mass(&self) -> f64 {
        self.particles.iter().map(|(_, w)| w).sum()
    }

    pub fn key(&self) -> BeliefKey {
        BeliefKey::of(self)
    }
}

/// Exact-identity lookup key for a canonical belief.
///
/// Holds the observable component and each particle probability quantized
/// to [`KEY_RESOLUTION`]. Equal canonical beliefs give equal keys; beliefs
/// differing in some probability by more than the resolution never collide.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct BeliefKey {
    observable: Observable,
    entries: Box<[(u32, u64)]>,
}

impl BeliefKey {
    pub fn of(belief: &BeliefState) -> Self {
        let entries = belief
            .particles
            .iter()
            .map(|(s, p)| (s.0, (p / KEY_RESOLUTION).round() as u64))
            .collect();
        BeliefKey {
            observable: belief.observable,
            entries,
        }
    }

    pub fn support_size(&self) -> usize {
        self.entries.len()
    }

    /// Stable 64-bit FNV-1a digest, used to derive per-belief RNG streams.
    pub fn digest(&self) -> u64 {
        let mut h = Fnv64::new();
        match self.observable {
            Some(o) => {
                h.write_u64(1);
                h.write_u64(o);
            }
            None => h.write_u64(0),
        }
        for (s, q) in self.entries.iter() {
            h.write_u64(*s as u64);
            h.write_u64(*q);
        }
        h.finish()
    }
}

impl Ord for BeliefKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.observable
            .cmp(&other.observable)
            .then_with(|| self.entries.cmp(&other.entries))
    }
}

impl PartialOrd for BeliefKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct Fnv64(u64);

impl Fnv64 {
    fn new() -> Self {
        Fnv64(0xcbf2_9ce4_8422_2325)
    }

    fn write_u64(&mut self, v: u64) {
        for byte in v.to_le_bytes() {
            self.0 ^= byte as u64;
            self.0 = self.0.wrapping_mul(0x0100_0000_01b3);
        }
    }

    fn finish(&self) -> u64 {
        self.0
    }
}

/// One observation branch of a belief transition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Branch {
    pub observation: ObservationId,
    pub probability: f64,
    pub successor: BeliefState,
}

/// All observation branches reachable by executing one action from a belief.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BeliefTransition {
    pub action: ActionId,
    pub branches: Vec<Branch>,
    pub expected_cost: f64,
}

impl BeliefTransition {
    pub fn branch(&self, observation: ObservationId) -> Option<&Branch> {
        self.branches.iter().find(|b| b.observation == observation)
    }
}

/// Counters of expensive model queries made during one solve.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct QueryLedger {
    pub transition_queries: u64,
    pub observation_queries: u64,
    pub validity_queries: u64,
    pub belief_transitions_computed: u64,
}

impl QueryLedger {
    /// Component-wise difference `self - earlier`.
    pub fn since(&self, earlier: &QueryLedger) -> QueryLedger {
        QueryLedger {
            transition_queries: self.transition_queries - earlier.transition_queries,
            observation_queries: self.observation_queries - earlier.observation_queries,
            validity_queries: self.validity_queries - earlier.validity_queries,
            belief_transitions_computed: self.belief_transitions_computed
                - earlier.belief_transitions_computed,
        }
    }

    /// True when no counter of `self` is below the matching counter of `earlier`.
    pub fn dominates(&self, earlier: &QueryLedger) -> bool {
        self.transition_queries >= earlier.transition_queries
            && self.observation_queries >= earlier.observation_queries
            && self.validity_queries >= earlier.validity_queries
            && self.belief_transitions_computed >= earlier.belief_transitions_computed
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(b: &BeliefState) -> Vec<(u32, f64)> {
        b.particles().iter().map(|(s, p)| (s.0, *p)).collect()
    }

    #[test]
    fn canonicalize_reorders() {
        let b = BeliefState::canonicalize([(StateId(3), 0.5), (StateId(1), 0.5)]).unwrap();
        assert_eq!(ids(&b), vec![(1, 0.5), (3, 0.5)]);
    }

    #[test]
    fn canonicalize_merges_and_normalizes() {
        let b = BeliefState::canonicalize([(StateId(2), 2.0), (StateId(2), 2.0)]).unwrap();
        assert_eq!(ids(&b), vec![(2, 1.0)]);
    }

    #[test]
    fn canonicalize_prunes_dust() {
        let b = BeliefState::canonicalize([(StateId(1), 1.0), (StateId(2), 1e-15)]).unwrap();
        assert_eq!(ids(&b), vec![(1, 1.0)]);
    }

    #[test]
    fn canonicalize_rejects_zero_and_negative() {
        assert!(matches!(
            BeliefState::canonicalize([(StateId(1), 0.0)]),
            Err(BeliefError::InvalidBelief(_))
        ));
        assert!(matches!(
            BeliefState::canonicalize([(StateId(1), -1.0), (StateId(2), 2.0)]),
            Err(BeliefError::InvalidBelief(_))
        ));
        assert!(BeliefState::canonicalize(Vec::new()).is_err());
    }

    #[test]
    fn keys_follow_quantization() {
        let a = BeliefState::canonicalize([(StateId(1), 0.5), (StateId(2), 0.5)]).unwrap();
        let b = BeliefState::canonicalize([(StateId(2), 1.0), (StateId(1), 1.0)]).unwrap();
        assert_eq!(a.key(), b.key());
        assert_eq!(a.key().digest(), b.key().digest());
        let c = BeliefState::canonicalize([(StateId(1), 0.5 + 3e-9), (StateId(2), 0.5 - 3e-9)])
            .unwrap();
        assert_ne!(a.key(), c.key());
        let d = a.clone().with_observable(Some(7));
        assert_ne!(a.key(), d.key());
    }

    #[test]
    fn observation_codes_reserve_goal() {
        assert!(ObservationId::GOAL.is_goal());
        assert_eq!(ObservationId::from_code(0).code(), Some(0));
        assert_eq!(ObservationId::GOAL.code(), None);
        assert!(ObservationId::GOAL < ObservationId::from_code(0));
    }
}
