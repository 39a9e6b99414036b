//! Shared fixtures and randomized checks for the integration tests and the
//! acceptance target.
#![allow(dead_code)]

use std::collections::BTreeMap;

use lazy_pomdp::belief::{ActionId, BeliefEngine, BeliefState, GoalPomdp, StateId};
use lazy_pomdp::domains::{
    cast_ray, contact_toy_model, corridor, fixtures, hypothesis_block, line_world,
    planted_partition, Cell, GridMap, LidarSpec, NavigationPomdp, Pose,
};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const TOL: f64 = 1e-9;

/// Every domain family, at sizes small enough for random walks.
pub fn all_domains() -> Vec<(&'static str, Box<dyn GoalPomdp>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    vec![
        ("line-world", Box::new(line_world())),
        ("corridor", Box::new(corridor(3))),
        ("indoor-slip-5x5", Box::new(fixtures::indoor_slip_small())),
        ("indoor-start-5x5", Box::new(fixtures::indoor_start_small())),
        (
            "indoor-start-info",
            Box::new(
                NavigationPomdp::indoor_start_from(
                    &fixtures::fixture("indoor_start_5x5").unwrap(),
                    true,
                )
                .unwrap(),
            ),
        ),
        (
            "indoor-slip-15x15",
            Box::new(fixtures::indoor_slip_large(&mut rng)),
        ),
        ("outdoor", Box::new(fixtures::outdoor_hazards())),
        (
            "contact-12",
            Box::new(contact_toy_model(hypothesis_block(4, 3)).unwrap()),
        ),
        (
            "contact-100",
            Box::new(contact_toy_model(planted_partition()).unwrap()),
        ),
    ]
}

fn check_normalized(b: &BeliefState, what: &str) -> Result<(), String> {
    let mass: f64 = b.particles().iter().map(|(_, p)| p).sum();
    if (mass - 1.0).abs() > TOL {
        return Err(format!("{what}: mass {mass}"));
    }
    if b.particles().windows(2).any(|w| w[0].0 >= w[1].0) {
        return Err(format!("{what}: particles not strictly increasing"));
    }
    Ok(())
}

/// One randomized step: checks normalization, Chapman–Kolmogorov
/// consistency, goal absorption and cache idempotence at `b`, then returns
/// a sampled successor (or the start belief after a goal).
fn check_and_step(
    model: &dyn GoalPomdp,
    engine: &BeliefEngine,
    b: &BeliefState,
    rng: &mut ChaCha8Rng,
) -> Result<BeliefState, String> {
    check_normalized(b, "belief")?;
    if engine.is_goal_belief(b) {
        if engine.compute_belief_transition(b, ActionId(0)).is_ok() {
            return Err("goal belief produced a transition".into());
        }
        // Goal states are absorbing and free.
        if model.goal_criterion() == lazy_pomdp::belief::GoalCriterion::GoalStates {
            for a in (0..model.num_actions()).map(ActionId) {
                let after = engine
                    .belief_after_action(b, a)
                    .map_err(|e| e.to_string())?;
                if after.key() != b.key() {
                    return Err(format!("goal belief moved under {a}"));
                }
                if engine.expected_cost(b, a) != 0.0 {
                    return Err("goal belief has a cost".into());
                }
            }
        }
        return Ok(model.initial_belief());
    }
    let actions: Vec<ActionId> = (0..model.num_actions())
        .map(ActionId)
        .filter(|&a| engine.is_applicable(b, a))
        .collect();
    let Some(&a) = actions.choose(rng) else {
        return Ok(model.initial_belief());
    };

    let before = engine.ledger().belief_transitions_computed;
    let cached = engine.cached_transition(&b.key(), a).is_some();
    let t = engine
        .compute_belief_transition(b, a)
        .map_err(|e| e.to_string())?;
    let again = engine
        .compute_belief_transition(b, a)
        .map_err(|e| e.to_string())?;
    let delta = engine.ledger().belief_transitions_computed - before;
    if delta != u64::from(!cached) {
        return Err(format!("cache miss counted {delta} times"));
    }
    if *t != *again {
        return Err("cached transition differs".into());
    }

    let b_a = engine
        .belief_after_action(b, a)
        .map_err(|e| e.to_string())?;
    check_normalized(&b_a, "predicted belief")?;
    let total: f64 = t.branches.iter().map(|br| br.probability).sum();
    if (total - 1.0).abs() > TOL || t.branches.iter().any(|br| br.probability <= 0.0) {
        return Err(format!("branch probabilities sum to {total}"));
    }
    let mut mix: BTreeMap<StateId, f64> = BTreeMap::new();
    for br in &t.branches {
        check_normalized(&br.successor, "successor")?;
        for &(s, p) in br.successor.particles() {
            *mix.entry(s).or_default() += br.probability * p;
        }
    }
    for &(s, p) in b_a.particles() {
        let m = mix.remove(&s).unwrap_or(0.0);
        if (m - p).abs() > TOL {
            return Err(format!("Chapman-Kolmogorov mismatch at {s}: {m} vs {p}"));
        }
    }
    if let Some((s, m)) = mix.into_iter().find(|(_, m)| *m > TOL) {
        return Err(format!("successor mass {m} on {s} outside the prediction"));
    }
    let expected: f64 = b
        .particles()
        .iter()
        .map(|(s, w)| w * model.cost(b.observable(), *s, a))
        .sum();
    if (expected - t.expected_cost).abs() > TOL {
        return Err("expected cost is not the belief-weighted cost".into());
    }

    let weights: Vec<f64> = t.branches.iter().map(|br| br.probability).collect();
    let i = rand::distr::weighted::WeightedIndex::new(&weights).unwrap();
    let next = t.branches[rng.sample(i)].successor.clone();
    Ok(next)
}

/// Runs `ops` randomized checks spread over every domain. Walks restart
/// from the initial belief on goals, dead ends and every 40 steps.
pub fn belief_invariant_sweep(ops: usize, seed: u64) -> Result<usize, String> {
    let domains = all_domains();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let engines: Vec<BeliefEngine> = domains
        .iter()
        .map(|(_, m)| BeliefEngine::new(&**m))
        .collect();
    let mut beliefs: Vec<BeliefState> = domains.iter().map(|(_, m)| m.initial_belief()).collect();
    for op in 0..ops {
        let d = op % domains.len();
        let (name, model) = &domains[d];
        if (op / domains.len()).is_multiple_of(40) {
            beliefs[d] = model.initial_belief();
        }
        beliefs[d] = check_and_step(&**model, &engines[d], &beliefs[d], &mut rng)
            .map_err(|e| format!("{name}, op {op}: {e}"))?;
    }
    Ok(ops)
}

/// Lattice direction of heading `h` (eighths of a turn counter-clockwise
/// from east, rows growing downward).
fn lattice(h: u8) -> (i32, i32) {
    [
        (1, 0),
        (1, -1),
        (0, -1),
        (-1, -1),
        (-1, 0),
        (-1, 1),
        (0, 1),
        (1, 1),
    ][h as usize % 8]
}

/// Brute force: step cell by cell until an occupied cell is entered.
pub fn brute_force_ray(map: &GridMap, origin: Cell, heading: u8, max_steps: u32) -> u32 {
    let (dx, dy) = lattice(heading);
    let mut c = origin;
    for steps in 1..=max_steps {
        c = Cell::new(c.x + dx, c.y + dy);
        if map.is_occupied(c) {
            return steps;
        }
    }
    max_steps
}

/// A random bordered map with about 25% interior obstacles.
pub fn random_map(rng: &mut ChaCha8Rng) -> GridMap {
    let (w, h) = (rng.random_range(5..20), rng.random_range(5..20));
    let mut map = GridMap::open(w, h);
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            if rng.random_bool(0.25) {
                map.set_occupied(Cell::new(x, y), true);
            }
        }
    }
    map
}

/// Compares every ray of `scan` with the brute-force walk on `fixtures`
/// random maps and poses. Returns the number of rays compared.
pub fn raycast_vs_brute_force(fixtures: usize, seed: u64) -> Result<usize, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spec = LidarSpec::default();
    let mut rays = 0;
    for i in 0..fixtures {
        let mut map = random_map(&mut rng);
        let free: Vec<Cell> = map.free_cells().collect();
        let cell = match free.choose(&mut rng) {
            Some(c) => *c,
            None => {
                let c = Cell::new(1, 1);
                map.set_occupied(c, false);
                c
            }
        };
        let pose = Pose::new(cell.x, cell.y, rng.random_range(0..8));
        let readings = lazy_pomdp::domains::raycast::scan(&map, pose, &spec);
        for (r, offset) in readings.iter().zip(&spec.rays) {
            let h = (pose.heading + (offset / 45.0).round() as u8) % 8;
            let want = brute_force_ray(&map, cell, h, spec.max_range) / spec.quantization;
            let direct = cast_ray(&map, cell, h as f64 * 45.0, spec.max_range) / spec.quantization;
            if *r != want || direct != want {
                return Err(format!(
                    "fixture {i}, pose {pose:?}, ray {offset}: {r} vs {want}"
                ));
            }
            rays += 1;
        }
    }
    Ok(rays)
}
