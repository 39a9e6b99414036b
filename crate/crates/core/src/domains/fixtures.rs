//! Committed map fixtures, embedded at compile time.

use rand::seq::IndexedRandom;
use rand::Rng;

use super::grid::{Cell, MapFixture, Pose, HEADINGS};
use super::navigation::NavigationPomdp;
use super::DomainError;

const FIXTURES: &[(&str, &str, Option<&str>)] = &[
    (
        "indoor_slip_5x5",
        include_str!("../../fixtures/indoor_slip_5x5.map"),
        None,
    ),
    (
        "indoor_start_5x5",
        include_str!("../../fixtures/indoor_start_5x5.map"),
        None,
    ),
    (
        "indoor_slip_15x15",
        include_str!("../../fixtures/indoor_slip_15x15.map"),
        None,
    ),
    (
        "outdoor_hazards",
        include_str!("../../fixtures/outdoor_hazards.map"),
        Some(include_str!("../../fixtures/outdoor_hazards.toml")),
    ),
];

pub fn names() -> impl Iterator<Item = &'static str> {
    FIXTURES.iter().map(|(n, _, _)| *n)
}

/// Parses an embedded fixture by name.
pub fn fixture(name: &str) -> Result<MapFixture, DomainError> {
    let (_, map, sidecar) = FIXTURES
        .iter()
        .find(|(n, _, _)| *n == name)
        .ok_or_else(|| DomainError::Config(format!("unknown fixture {name:?}")))?;
    MapFixture::parse(map, *sidecar)
}

/// 5×5 slip world with a known start.
pub fn indoor_slip_small() -> NavigationPomdp {
    NavigationPomdp::indoor_stochastic_from(&fixture("indoor_slip_5x5").unwrap()).unwrap()
}

/// 5×5 world with three equally likely start poses, goal-directed.
pub fn indoor_start_small() -> NavigationPomdp {
    NavigationPomdp::indoor_start_from(&fixture("indoor_start_5x5").unwrap(), false).unwrap()
}

/// 15×15 slip world; start and goal drawn per seed.
pub fn indoor_slip_large<R: Rng>(rng: &mut R) -> NavigationPomdp {
    let fx = fixture("indoor_slip_15x15").unwrap();
    let (start, goal) = random_start_goal(&fx, rng, 6.0);
    super::navigation::indoor_stochastic_model(
        fx.map,
        fx.sidecar.primitives,
        fx.sidecar.lidar,
        start,
        [goal].into_iter().collect(),
    )
    .unwrap()
}

/// 30 start hypotheses, landmarks, and a hazard strip in front of the goal.
pub fn outdoor_hazards() -> NavigationPomdp {
    NavigationPomdp::outdoor_from(&fixture("outdoor_hazards").unwrap(), false).unwrap()
}

/// A free start pose and a free goal cell at least `min_separation` apart
/// (straight-line), ignoring the fixture's own `S`/`G` annotations.
pub fn random_start_goal<R: Rng>(
    fx: &MapFixture,
    rng: &mut R,
    min_separation: f64,
) -> (Pose, Cell) {
    let free: Vec<Cell> = fx.map.free_cells().collect();
    loop {
        let s = *free.choose(rng).expect("map has free cells");
        let g = *free.choose(rng).expect("map has free cells");
        if s.distance(g) >= min_separation {
            let heading = rng.random_range(0..HEADINGS);
            return (Pose::new(s.x, s.y, heading), g);
        }
    }
}
