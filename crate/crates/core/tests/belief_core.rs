mod common;

use approx::assert_abs_diff_eq;
use lazy_pomdp::belief::{
    ActionId, BeliefEngine, BeliefError, BeliefKey, BeliefState, GoalPomdp, ObservationId, StateId,
    KEY_RESOLUTION,
};
use lazy_pomdp::domains::line_world::{line_world, RIGHT};
use lazy_pomdp::domains::{contact_toy_model, Cell, ContactWorld, Sweep};
use proptest::prelude::*;

fn b(pairs: &[(u32, f64)]) -> BeliefState {
    BeliefState::canonicalize(pairs.iter().map(|&(s, p)| (StateId(s), p))).unwrap()
}

#[test]
fn line_world_shift_right() {
    let m = line_world();
    let e = BeliefEngine::new(&m);
    let after = e
        .belief_after_action(&b(&[(0, 1.0), (1, 1.0), (2, 1.0)]), RIGHT)
        .unwrap();
    assert_eq!(after, b(&[(1, 1.0), (2, 1.0), (3, 1.0)]));
}

#[test]
fn goal_belief_absorbs() {
    let m = line_world();
    let e = BeliefEngine::new(&m);
    let g = b(&[(4, 1.0)]);
    for a in [ActionId(0), ActionId(1)] {
        assert_eq!(e.belief_after_action(&g, a).unwrap(), g);
        assert_eq!(e.expected_cost(&g, a), 0.0);
    }
    assert!(e.is_goal_belief(&g));
    assert!(!e.is_goal_belief(&b(&[(3, 0.5), (4, 0.5)])));
    assert_eq!(
        e.compute_belief_transition(&g, RIGHT).unwrap_err(),
        BeliefError::GoalBelief
    );
}

#[test]
fn goal_indicator_observation() {
    let m = line_world();
    let e = BeliefEngine::new(&m);
    let b_a = b(&[(3, 0.5), (4, 0.5)]);
    let dist = e.observation_distribution(&b_a, RIGHT).unwrap();
    assert_eq!(dist.len(), 2);
    for (_, p) in &dist {
        assert_abs_diff_eq!(*p, 0.5, epsilon = 1e-12);
    }
    let not_goal = dist.iter().find(|(z, _)| !z.is_goal()).unwrap().0;
    assert_eq!(
        e.belief_after_observation(&b_a, RIGHT, not_goal).unwrap(),
        b(&[(3, 1.0)])
    );
    assert_eq!(
        e.belief_after_observation(&b_a, RIGHT, ObservationId::GOAL)
            .unwrap(),
        b(&[(4, 1.0)])
    );
}

#[test]
fn line_world_transition_from_two_and_three() {
    let m = line_world();
    let e = BeliefEngine::new(&m);
    let t = e
        .compute_belief_transition(&b(&[(2, 0.5), (3, 0.5)]), RIGHT)
        .unwrap();
    assert_abs_diff_eq!(t.expected_cost, 1.0);
    assert_eq!(t.branches.len(), 2);
    let g = t.branch(ObservationId::GOAL).unwrap();
    assert_abs_diff_eq!(g.probability, 0.5);
    assert_eq!(g.successor, b(&[(4, 1.0)]));
    let ng = t
        .branches
        .iter()
        .find(|br| !br.observation.is_goal())
        .unwrap();
    assert_abs_diff_eq!(ng.probability, 0.5);
    assert_eq!(ng.successor, b(&[(3, 1.0)]));
}

/// Four hypotheses in a row, each stopping the sweep at a different cell.
fn four_way() -> impl GoalPomdp {
    contact_toy_model(ContactWorld {
        width: 6,
        height: 1,
        hypotheses: (1..5).map(|x| Cell::new(x, 0)).collect(),
        robot: Cell::new(0, 0),
        sweeps: vec![Sweep::new(1, 0, 5), Sweep::new(-1, 0, 1)],
    })
    .unwrap()
}

#[test]
fn distinct_observations_split_evenly() {
    let m = four_way();
    let e = BeliefEngine::new(&m);
    let dist = e
        .observation_distribution(&m.initial_belief(), ActionId(0))
        .unwrap();
    assert_eq!(dist.len(), 4);
    assert!(dist.iter().all(|(_, p)| (p - 0.25).abs() < 1e-12));
}

#[test]
fn shared_observation_is_uninformative() {
    // Sweeping east by one cell never reaches the block two cells away.
    let m = contact_toy_model(ContactWorld {
        width: 8,
        height: 1,
        hypotheses: (3..7).map(|x| Cell::new(x, 0)).collect(),
        robot: Cell::new(0, 0),
        sweeps: vec![Sweep::new(1, 0, 1)],
    })
    .unwrap();
    let e = BeliefEngine::new(&m);
    let b0 = m.initial_belief();
    let t = e.compute_belief_transition(&b0, ActionId(0)).unwrap();
    assert_eq!(t.branches.len(), 1);
    assert_eq!(t.branches[0].probability, 1.0);
    assert_eq!(t.branches[0].successor.particles(), b0.particles());
}

#[test]
fn cache_counts_each_pair_once() {
    let m = line_world();
    let e = BeliefEngine::new(&m);
    let b0 = m.initial_belief();
    let first = e.compute_belief_transition(&b0, RIGHT).unwrap();
    let queries = e.ledger();
    let second = e.compute_belief_transition(&b0, RIGHT).unwrap();
    assert_eq!(*first, *second);
    assert_eq!(e.ledger(), queries);
    assert_eq!(queries.belief_transitions_computed, 1);
}

#[test]
fn randomized_invariants_across_domains() {
    let ops = common::belief_invariant_sweep(20_000, 11).unwrap();
    assert_eq!(ops, 20_000);
}

fn raw_belief() -> impl Strategy<Value = Vec<(u32, f64)>> {
    prop::collection::vec((0u32..40, 1e-6f64..10.0), 1..25)
}

proptest! {
    #[test]
    fn canonical_beliefs_are_normalized(raw in raw_belief()) {
        let belief = b(&raw);
        let mass: f64 = belief.particles().iter().map(|(_, p)| p).sum();
        prop_assert!((mass - 1.0).abs() <= 1e-9);
        prop_assert!(belief.particles().windows(2).all(|w| w[0].0 < w[1].0));
    }

    #[test]
    fn canonicalization_is_order_free(raw in raw_belief()) {
        let mut reversed = raw.clone();
        reversed.reverse();
        prop_assert_eq!(b(&raw).key(), b(&reversed).key());
    }

    #[test]
    fn perturbations_beyond_resolution_change_the_key(
        raw in prop::collection::vec(1e-3f64..1.0, 2..10),
        which in any::<prop::sample::Index>(),
    ) {
        let base = BeliefState::canonicalize(raw.iter().enumerate().map(|(i, &w)| (StateId(i as u32), w))).unwrap();
        let i = which.index(raw.len());
        // Shift mass from one particle to the next by well over the resolution.
        let mut moved: Vec<(StateId, f64)> = base.particles().to_vec();
        let j = (i + 1) % moved.len();
        let shift = 1000.0 * KEY_RESOLUTION;
        prop_assume!(moved[i].1 > shift);
        moved[i].1 -= shift;
        moved[j].1 += shift;
        let other = BeliefState::canonicalize(moved).unwrap();
        prop_assert_ne!(BeliefKey::of(&base), BeliefKey::of(&other));
        prop_assert_eq!(BeliefKey::of(&base), base.clone().key());
    }

    #[test]
    fn chapman_kolmogorov_on_line_world(raw in prop::collection::vec((0u32..4, 0.01f64..1.0), 1..4), right in any::<bool>()) {
        let m = line_world();
        let e = BeliefEngine::new(&m);
        let belief = b(&raw);
        let a = if right { RIGHT } else { ActionId(0) };
        let b_a = e.belief_after_action(&belief, a).unwrap();
        let t = e.transition_uncached(&belief, a).unwrap();
        for &(s, p) in b_a.particles() {
            let mixed: f64 = t.branches.iter().map(|br| br.probability * br.successor.probability(s)).sum();
            prop_assert!((mixed - p).abs() <= 1e-9);
        }
    }
}
