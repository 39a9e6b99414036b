use std::cell::{Cell, RefCell};
use std::collections::{BTreeMap, HashMap};
use std::rc::Rc;
use std::time::Duration;

use super::{
    ActionId, BeliefError, BeliefKey, BeliefState, BeliefTransition, Branch, GoalCriterion,
    GoalPomdp, ObservationId, QueryLedger, Result, StateId, BRANCH_THRESHOLD,
    NORMALIZATION_TOLERANCE,
};

/// Instrumented access to a [`GoalPomdp`] for a single solve.
///
/// Owns the query counters and the transition cache; the model itself is
/// shared read-only. Not `Sync`: one engine per solve.
pub struct BeliefEngine<'m> {
    model: &'m dyn GoalPomdp,
    delay: Duration,
    transition_queries: Cell<u64>,
    observation_queries: Cell<u64>,
    validity_queries: Cell<u64>,
    belief_transitions: Cell<u64>,
    cache: RefCell<HashMap<(BeliefKey, ActionId), Rc<BeliefTransition>>>,
}

impl<'m> BeliefEngine<'m> {
    pub fn new(model: &'m dyn GoalPomdp) -> Self {
        BeliefEngine {
            model,
            delay: Duration::ZERO,
            transition_queries: Cell::new(0),
            observation_queries: Cell::new(0),
            validity_queries: Cell::new(0),
            belief_transitions: Cell::new(0),
            cache: RefCell::new(HashMap::new()),
        }
    }

    /// Artificial latency added to every transition, observation and validity query.
    pub fn with_query_delay(mut self, delay: Duration) -> Self {
        self.delay = delay;
        self
    }

    pub fn model(&self) -> &'m dyn GoalPomdp {
        self.model
    }

    pub fn ledger(&self) -> QueryLedger {
        QueryLedger {
            transition_queries: self.transition_queries.get(),
            observation_queries: self.observation_queries.get(),
            validity_queries: self.validity_queries.get(),
            belief_transitions_computed: self.belief_transitions.get(),
        }
    }

    fn pause(&self) {
        if !self.delay.is_zero() {
            std::thread::sleep(self.delay);
        }
    }

    fn bump(counter: &Cell<u64>) {
        counter.set(counter.get() + 1);
    }

    /// Counted `T(s, a, ·)` query with row validation.
    pub fn query_transition(
        &self,
        b: &BeliefState,
        state: StateId,
        action: ActionId,
    ) -> Result<Vec<(StateId, f64)>> {
        Self::bump(&self.transition_queries);
        self.pause();
        let row = self.model.transition(b.observable(), state, action);
        if row.is_empty() {
            return Err(BeliefError::DomainModel(format!(
                "no successors for {state} under {action}"
            )));
        }
        check_row(row.iter().map(|(_, p)| *p), || {
            format!("T({state}, {action}, .)")
        })?;
        Ok(row)
    }

    /// Counted `O(s', a, ·)` query with row validation.
    pub fn query_observation(
        &self,
        b: &BeliefState,
        next: StateId,
        action: ActionId,
    ) -> Result<Vec<(ObservationId, f64)>> {
        Self::bump(&self.observation_queries);
        self.pause();
        let row = self.model.observation(b.observable(), next, action);
        check_row(row.iter().map(|(_, p)| *p), || {
            format!("O({next}, {action}, .)")
        })?;
        Ok(row)
    }

    /// Counted single-state validity query.
    pub fn query_validity(&self, b: &BeliefState, state: StateId, action: ActionId) -> bool {
        Self::bump(&self.validity_queries);
        self.pause();
        self.model.is_valid(b.observable(), state, action)
    }

    /// `b_a(s) = sum_{s'} T(s', a, s) b(s')`.
    pub fn belief_after_action(&self, b: &BeliefState, action: ActionId) -> Result<BeliefState> {
        let mut acc: BTreeMap<StateId, f64> = BTreeMap::new();
        for &(s, w) in b.particles() {
            for (next, p) in self.query_transition(b, s, action)? {
                *acc.entry(next).or_default() += p * w;
            }
        }
        BeliefState::canonicalize_with(b.observable(), acc)
    }

    /// `b_a(z) = sum_s b_a(s) O(s, a, z)`, zero-probability observations omitted.
    pub fn observation_distribution(
        &self,
        b_a: &BeliefState,
        action: ActionId,
    ) -> Result<Vec<(ObservationId, f64)>> {
        let mut acc: BTreeMap<ObservationId, f64> = BTreeMap::new();
        for &(s, w) in b_a.particles() {
            for (z, p) in self.query_observation(b_a, s, action)? {
                if p > 0.0 {
                    *acc.entry(z).or_default() += p * w;
                }
            }
        }
        Ok(acc.into_iter().filter(|(_, p)| *p > 0.0).collect())
    }

    /// `b_a^z(s) = O(s, a, z) b_a(s) / b_a(z)`.
    pub fn belief_after_observation(
        &self,
        b_a: &BeliefState,
        action: ActionId,
        z: ObservationId,
    ) -> Result<BeliefState> {
        let mut weighted = Vec::new();
        for &(s, w) in b_a.particles() {
            let pz: f64 = self
                .query_observation(b_a, s, action)?
                .into_iter()
                .filter(|(o, _)| *o == z)
                .map(|(_, p)| p)
                .sum();
            if pz > 0.0 {
                weighted.push((s, pz * w));
            }
        }
        let mass: f64 = weighted.iter().map(|(_, w)| w).sum();
        if mass <= 0.0 {
            return Err(BeliefError::ZeroProbabilityObservation(z));
        }
        let observable = self.model.next_observable(b_a.observable(), action, z);
        BeliefState::canonicalize_with(observable, weighted)
    }

    pub fn is_goal_belief(&self, b: &BeliefState) -> bool {
        match self.model.goal_criterion() {
            GoalCriterion::GoalStates => b.states().all(|s| self.model.is_goal_state(s)),
            GoalCriterion::Localized => b.support_size() <= 1,
        }
    }

    /// Structural applicability of `action` from every particle of `b` (not counted).
    pub fn is_applicable(&self, b: &BeliefState, action: ActionId) -> bool {
        b.states()
            .all(|s| self.model.is_applicable(b.observable(), s, action))
    }

    /// Validity of `action` from `b`: the conjunction over support particles.
    /// Counts one validity query per particle checked.
    pub fn check_validity(&self, b: &BeliefState, action: ActionId) -> bool {
        b.states().all(|s| self.query_validity(b, s, action))
    }

    /// `c(b, a) = sum_s c(s, a) b(s)`.
    pub fn expected_cost(&self, b: &BeliefState, action: ActionId) -> f64 {
        b.particles()
            .iter()
            .map(|(s, w)| w * self.model.cost(b.observable(), *s, action))
            .sum()
    }

    /// Computes all observation branches without touching the cache or the
    /// belief-transition counter. Model queries are still counted.
    pub fn transition_uncached(
        &self,
        b: &BeliefState,
        action: ActionId,
    ) -> Result<BeliefTransition> {
        let b_a = self.belief_after_action(b, action)?;
        let mut groups: BTreeMap<ObservationId, Vec<(StateId, f64)>> = BTreeMap::new();
        for &(s, w) in b_a.particles() {
            for (z, p) in self.query_observation(&b_a, s, action)? {
                if p > 0.0 {
                    groups.entry(z).or_default().push((s, p * w));
                }
            }
        }
        type Group = (ObservationId, f64, Vec<(StateId, f64)>);
        let mut raw: Vec<Group> = groups
            .into_iter()
            .map(|(z, parts)| (z, parts.iter().map(|(_, w)| w).sum::<f64>(), parts))
            .filter(|(_, mass, _)| *mass >= BRANCH_THRESHOLD)
            .collect();
        let total: f64 = raw.iter().map(|(_, m, _)| m).sum();
        if raw.is_empty() || total <= 0.0 {
            return Err(BeliefError::NoObservationBranches);
        }
        let mut branches = Vec::with_capacity(raw.len());
        for (z, mass, parts) in raw.drain(..) {
            let observable = self.model.next_observable(b.observable(), action, z);
            branches.push(Branch {
                observation: z,
                probability: mass / total,
                successor: BeliefState::canonicalize_with(observable, parts)?,
            });
        }
        Ok(BeliefTransition {
            action,
            branches,
            expected_cost: self.expected_cost(b, action),
        })
    }

    /// Full belief transition for `(b, action)`, cached by `(BeliefKey, ActionId)`.
    /// The belief-transition counter increases only on a cache miss.
    pub fn compute_belief_transition(
        &self,
        b: &BeliefState,
        action: ActionId,
    ) -> Result<Rc<BeliefTransition>> {
        self.compute_keyed(&b.key(), b, action)
    }

    pub fn compute_keyed(
        &self,
        key: &BeliefKey,
        b: &BeliefState,
        action: ActionId,
    ) -> Result<Rc<BeliefTransition>> {
        if let Some(hit) = self.cache.borrow().get(&(key.clone(), action)) {
            return Ok(Rc::clone(hit));
        }
        if self.is_goal_belief(b) {
            return Err(BeliefError::GoalBelief);
        }
        let transition = Rc::new(self.transition_uncached(b, action)?);
        Self::bump(&self.belief_transitions);
        self.cache
            .borrow_mut()
            .insert((key.clone(), action), Rc::clone(&transition));
        Ok(transition)
    }

    pub fn cached_transition(
        &self,
        key: &BeliefKey,
        action: ActionId,
    ) -> Option<Rc<BeliefTransition>> {
        self.cache.borrow().get(&(key.clone(), action)).cloned()
    }

    pub fn forget_transition(&self, key: &BeliefKey, action: ActionId) {
        self.cache.borrow_mut().remove(&(key.clone(), action));
    }

    pub fn clear_cache(&self) {
        self.cache.borrow_mut().clear();
    }

    pub fn cache_len(&self) -> usize {
        self.cache.borrow().len()
    }
}

fn check_row(probs: impl Iterator<Item = f64>, what: impl Fn() -> String) -> Result<()> {
    let mut total = 0.0;
    for p in probs {
        if !(0.0..=1.0 + NORMALIZATION_TOLERANCE).contains(&p) {
            return Err(BeliefError::DomainModel(format!(
                "{}: probability {p}",
                what()
            )));
        }
        total += p;
    }
    if (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
        return Err(BeliefError::DomainModel(format!(
            "{} sums to {total}",
            what()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::belief::Observable;

    /// Three states, one action that scatters state 0 and keeps the others;
    /// state 2 is the goal.
    struct Scatter {
        broken_row: bool,
    }

    impl GoalPomdp for Scatter {
        fn num_states(&self) -> usize {
            3
        }
        fn num_actions(&self) -> usize {
            1
        }
        fn initial_belief(&self) -> BeliefState {
            BeliefState::certain(StateId(0))
        }
        fn is_goal_state(&self, s: StateId) -> bool {
            s.0 == 2
        }
        fn transition(&self, _: Observable, s: StateId, _: ActionId) -> Vec<(StateId, f64)> {
            match s.0 {
                0 if self.broken_row => vec![],
                0 => vec![(StateId(1), 0.5), (StateId(2), 0.5)],
                s => vec![(StateId(s), 1.0)],
            }
        }
        fn observation(&self, _: Observable, s: StateId, _: ActionId) -> Vec<(ObservationId, f64)> {
            if s.0 == 2 {
                vec![(ObservationId::GOAL, 1.0)]
            } else {
                vec![
                    (ObservationId::from_code(0), 0.7),
                    (ObservationId::from_code(1), 0.3),
                ]
            }
        }
        fn cost(&self, _: Observable, s: StateId, _: ActionId) -> f64 {
            if s.0 == 2 {
                0.0
            } else {
                1.0
            }
        }
    }

    #[test]
    fn cached_transition_counts_once() {
        let model = Scatter { broken_row: false };
        let engine = BeliefEngine::new(&model);
        let b0 = model.initial_belief();
        let t1 = engine.compute_belief_transition(&b0, ActionId(0)).unwrap();
        let after_first = engine.ledger();
        let t2 = engine.compute_belief_transition(&b0, ActionId(0)).unwrap();
        assert_eq!(t1, t2);
        assert_eq!(engine.ledger(), after_first);
        assert_eq!(after_first.belief_transitions_computed, 1);
        assert_eq!(after_first.transition_queries, 1);
        assert_eq!(after_first.observation_queries, 2);
        let probs: Vec<f64> = t1.branches.iter().map(|b| b.probability).collect();
        assert_eq!(t1.branches[0].observation, ObservationId::GOAL);
        assert!((probs[0] - 0.5).abs() < 1e-12);
        assert!((probs[1] - 0.35).abs() < 1e-12);
        assert!((probs[2] - 0.15).abs() < 1e-12);
    }

    #[test]
    fn empty_successor_row_is_a_model_error() {
        let model = Scatter { broken_row: true };
        let engine = BeliefEngine::new(&model);
        let err = engine
            .belief_after_action(&model.initial_belief(), ActionId(0))
            .unwrap_err();
        assert!(matches!(err, BeliefError::DomainModel(_)));
    }

    #[test]
    fn goal_belief_has_no_transition() {
        let model = Scatter { broken_row: false };
        let engine = BeliefEngine::new(&model);
        let goal = BeliefState::certain(StateId(2));
        assert!(engine.is_goal_belief(&goal));
        assert_eq!(
            engine
                .compute_belief_transition(&goal, ActionId(0))
                .unwrap_err(),
            BeliefError::GoalBelief
        );
    }

    #[test]
    fn conditioning_on_impossible_observation_fails() {
        let model = Scatter { broken_row: false };
        let engine = BeliefEngine::new(&model);
        let b = BeliefState::certain(StateId(1));
        let err = engine
            .belief_after_observation(&b, ActionId(0), ObservationId::GOAL)
            .unwrap_err();
        assert_eq!(
            err,
            BeliefError::ZeroProbabilityObservation(ObservationId::GOAL)
        );
    }
}
