use super::{ActionId, BeliefState, ObservationId, StateId};

/// Optional fully observable component carried alongside the particles.
pub type Observable = Option<u64>;

/// How a domain decides that a belief is terminal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GoalCriterion {
    /// Every support particle is a goal state.
    GoalStates,
    /// The belief is localized to at most one hypothesis.
    Localized,
}

/// The Goal-POMDP contract a domain implements.
///
/// Per-state queries take the belief's observable component as context.
/// Goal states must be absorbing, cost-free and emit
/// [`ObservationId::GOAL`] with probability one; non-goal states never emit it.
pub trait GoalPomdp: Send + Sync {
    fn num_states(&self) -> usize;

    fn num_actions(&self) -> usize;

    fn action_name(&self, action: ActionId) -> String {
        format!("a{}", action.0)
    }

    fn initial_belief(&self) -> BeliefState;

    fn goal_criterion(&self) -> GoalCriterion {
        GoalCriterion::GoalStates
    }

    fn is_goal_state(&self, state: StateId) -> bool;

    /// Cheap structural feasibility (e.g. no wall collision). An action is
    /// applicable from a belief only if it is applicable from every particle.
    fn is_applicable(&self, _ctx: Observable, _state: StateId, _action: ActionId) -> bool {
        true
    }

    /// Successor distribution `T(s, a, ·)`.
    fn transition(&self, ctx: Observable, state: StateId, action: ActionId) -> Vec<(StateId, f64)>;

    /// Observation distribution `O(s', a, ·)` upon entering `next`.
    fn observation(
        &self,
        ctx: Observable,
        next: StateId,
        action: ActionId,
    ) -> Vec<(ObservationId, f64)>;

    /// Observable component after executing `action` and observing `z`.
    fn next_observable(&self, ctx: Observable, _action: ActionId, _z: ObservationId) -> Observable {
        ctx
    }

    fn cost(&self, ctx: Observable, state: StateId, action: ActionId) -> f64;

    /// Whether the domain exposes an expensive action-validity oracle.
    fn has_validity_oracle(&self) -> bool {
        false
    }

    /// Expensive per-state validity check; only meaningful when
    /// [`GoalPomdp::has_validity_oracle`] is true.
    fn is_valid(&self, _ctx: Observable, _state: StateId, _action: ActionId) -> bool {
        true
    }
}

/// Heuristic estimate of the cost-to-go of a belief.
pub trait BeliefHeuristic: Send + Sync {
    fn value(&self, belief: &BeliefState) -> f64;
}

/// Heuristic estimate of the cost-to-go of a single state.
pub trait StateHeuristic: Send + Sync {
    fn state_value(&self, state: StateId) -> f64;
}

impl<F> StateHeuristic for F
where
    F: Fn(StateId) -> f64 + Send + Sync,
{
    fn state_value(&self, state: StateId) -> f64 {
        self(state)
    }
}

/// `heur(b) = E_{s~b} heur(s)`.
pub struct ExpectedStateHeuristic<H>(pub H);

impl<H: StateHeuristic> BeliefHeuristic for ExpectedStateHeuristic<H> {
    fn value(&self, belief: &BeliefState) -> f64 {
        belief
            .particles()
            .iter()
            .map(|(s, p)| p * self.0.state_value(*s))
            .sum()
    }
}

impl<H: StateHeuristic> StateHeuristic for ExpectedStateHeuristic<H> {
    fn state_value(&self, state: StateId) -> f64 {
        self.0.state_value(state)
    }
}

/// Entropy surrogate `heur(b) = alpha * |H|` for information-gathering tasks.
#[derive(Debug, Clone, Copy)]
pub struct HypothesisCount {
    pub alpha: f64,
}

impl BeliefHeuristic for HypothesisCount {
    fn value(&self, belief: &BeliefState) -> f64 {
        self.alpha * belief.support_size() as f64
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroHeuristic;

impl BeliefHeuristic for ZeroHeuristic {
    fn value(&self, _belief: &BeliefState) -> f64 {
        0.0
    }
}

impl StateHeuristic for ZeroHeuristic {
    fn state_value(&self, _state: StateId) -> f64 {
        0.0
    }
}

impl<T: BeliefHeuristic + ?Sized> BeliefHeuristic for &T {
    fn value(&self, belief: &BeliefState) -> f64 {
        (**self).value(belief)
    }
}

impl<T: BeliefHeuristic + ?Sized> BeliefHeuristic for std::sync::Arc<T> {
    fn value(&self, belief: &BeliefState) -> f64 {
        (**self).value(belief)
    }
}

impl<T: StateHeuristic + ?Sized> StateHeuristic for std::sync::Arc<T> {
    fn state_value(&self, state: StateId) -> f64 {
        (**self).state_value(state)
    }
}
