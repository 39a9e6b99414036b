//! Discrete contact localization: an object sits in one unknown cell of a
//! hypothesis set; the robot sweeps along grid axes and reports where it
//! stopped and whether it touched something.

use super::grid::Cell;
use super::DomainError;
use crate::belief::{
    ActionId, BeliefState, GoalCriterion, GoalPomdp, Observable, ObservationId, StateId,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Sweep {
    pub dx: i32,
    pub dy: i32,
    pub length: u32,
}

impl Sweep {
    pub fn new(dx: i32, dy: i32, length: u32) -> Self {
        Sweep { dx, dy, length }
    }
}

/// Workspace, hypothesis cells, robot start cell and sweep actions.
#[derive(Debug, Clone, PartialEq)]
pub struct ContactWorld {
    pub width: i32,
    pub height: i32,
    pub hypotheses: Vec<Cell>,
    pub robot: Cell,
    pub sweeps: Vec<Sweep>,
}

impl ContactWorld {
    /// Four axis directions times every length in `lengths`.
    pub fn axis_sweeps(lengths: &[u32]) -> Vec<Sweep> {
        let mut out = Vec::new();
        for (dx, dy) in [(1, 0), (0, -1), (-1, 0), (0, 1)] {
            for &len in lengths {
                out.push(Sweep::new(dx, dy, len));
            }
        }
        out
    }
}

/// `n = 100` fixture: a 10×10 block of hypotheses right of the robot. The
/// first action sweeps east along the robot's row: the 10 in-row hypotheses
/// produce singleton contact branches, the remaining 90 share the
/// no-contact branch.
pub fn planted_partition() -> ContactWorld {
    hypothesis_block(10, 10)
}

/// A `cols × rows` hypothesis block starting two cells right of the robot,
/// which sits at mid-height on the left edge. Action 0 sweeps east across
/// the whole block; the rest are axis sweeps of length 1, 3 and 6.
pub fn hypothesis_block(cols: u32, rows: u32) -> ContactWorld {
    let (cols, rows) = (cols.max(1) as i32, rows.max(1) as i32);
    let hypotheses = (0..rows)
        .flat_map(|y| (0..cols).map(move |x| Cell::new(x + 2, y)))
        .collect();
    let mut sweeps = vec![Sweep::new(1, 0, cols as u32 + 2)];
    sweeps.extend(ContactWorld::axis_sweeps(&[1, 3, 6]));
    ContactWorld {
        width: cols + 3,
        height: rows,
        hypotheses,
        robot: Cell::new(0, (rows - 1) / 2),
        sweeps,
    }
}

#[derive(Debug, Clone)]
pub struct ContactToy {
    world: ContactWorld,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SweepOutcome {
    pub stop: Cell,
    pub contact: bool,
    pub travelled: u32,
}

pub fn contact_toy_model(world: ContactWorld) -> Result<ContactToy, DomainError> {
    if world.hypotheses.is_empty() {
        return Err(DomainError::Fixture("empty hypothesis set".into()));
    }
    if world.sweeps.is_empty() {
        return Err(DomainError::Fixture("no sweep actions".into()));
    }
    let in_bounds = |c: &Cell| c.x >= 0 && c.y >= 0 && c.x < world.width && c.y < world.height;
    if !world.hypotheses.iter().all(in_bounds) || !in_bounds(&world.robot) {
        return Err(DomainError::Fixture("cell outside the workspace".into()));
    }
    if world.hypotheses.contains(&world.robot) {
        return Err(DomainError::Fixture(
            "robot starts inside a hypothesis cell".into(),
        ));
    }
    let mut sorted = world.hypotheses.clone();
    sorted.sort();
    sorted.dedup();
    if sorted.len() != world.hypotheses.len() {
        return Err(DomainError::Fixture("duplicate hypothesis cell".into()));
    }
    for s in &world.sweeps {
        if s.length == 0 || s.dx.abs() + s.dy.abs() != 1 {
            return Err(DomainError::Fixture(format!("bad sweep {s:?}")));
        }
    }
    Ok(ContactToy { world })
}

impl ContactToy {
    pub fn world(&self) -> &ContactWorld {
        &self.world
    }

    pub fn hypothesis(&self, state: StateId) -> Cell {
        self.world.hypotheses[state.index()]
    }

    fn in_bounds(&self, c: Cell) -> bool {
        c.x >= 0 && c.y >= 0 && c.x < self.world.width && c.y < self.world.height
    }

    fn cell_code(&self, c: Cell) -> u64 {
        (c.y * self.world.width + c.x) as u64
    }

    fn cell_of(&self, code: u64) -> Cell {
        let w = self.world.width as u64;
        Cell::new((code % w) as i32, (code / w) as i32)
    }

    fn robot(&self, ctx: Observable) -> Cell {
        ctx.map_or(self.world.robot, |code| self.cell_of(code))
    }

    /// Moves until the next cell holds the object (contact, stop adjacent),
    /// leaves the workspace, or the sweep length is used up.
    pub fn sweep(&self, robot: Cell, object: Cell, action: ActionId) -> SweepOutcome {
        let sw = self.world.sweeps[action.0];
        let mut at = robot;
        for travelled in 0..sw.length {
            let next = at.offset(sw.dx, sw.dy);
            if next == object {
                return SweepOutcome {
                    stop: at,
                    contact: true,
                    travelled,
                };
            }
            if !self.in_bounds(next) {
                return SweepOutcome {
                    stop: at,
                    contact: false,
                    travelled,
                };
            }
            at = next;
        }
        SweepOutcome {
            stop: at,
            contact: false,
            travelled: sw.length,
        }
    }
}

impl GoalPomdp for ContactToy {
    fn num_states(&self) -> usize {
        self.world.hypotheses.len()
    }

    fn num_actions(&self) -> usize {
        self.world.sweeps.len()
    }

    fn action_name(&self, action: ActionId) -> String {
        let s = self.world.sweeps[action.0];
        let dir = match (s.dx, s.dy) {
            (1, 0) => "east",
            (-1, 0) => "west",
            (0, -1) => "north",
            _ => "south",
        };
        format!("{dir}-{}", s.length)
    }

    fn initial_belief(&self) -> BeliefState {
        let b = BeliefState::uniform((0..self.world.hypotheses.len() as u32).map(StateId))
            .expect("non-empty hypothesis set");
        b.with_observable(Some(self.cell_code(self.world.robot)))
    }

    fn goal_criterion(&self) -> GoalCriterion {
        GoalCriterion::Localized
    }

    fn is_goal_state(&self, _: StateId) -> bool {
        false
    }

    /// A sweep whose first step leaves the workspace cannot move.
    fn is_applicable(&self, ctx: Observable, _: StateId, action: ActionId) -> bool {
        let sw = self.world.sweeps[action.0];
        self.in_bounds(self.robot(ctx).offset(sw.dx, sw.dy))
    }

    fn transition(&self, _: Observable, state: StateId, _: ActionId) -> Vec<(StateId, f64)> {
        vec![(state, 1.0)]
    }

    fn observation(
        &self,
        ctx: Observable,
        next: StateId,
        action: ActionId,
    ) -> Vec<(ObservationId, f64)> {
        let out = self.sweep(self.robot(ctx), self.hypothesis(next), action);
        let code = self.cell_code(out.stop) * 2 + out.contact as u64;
        vec![(ObservationId::from_code(code), 1.0)]
    }

    fn next_observable(&self, ctx: Observable, _: ActionId, z: ObservationId) -> Observable {
        z.code().map(|c| c / 2).or(ctx)
    }

    fn cost(&self, ctx: Observable, state: StateId, action: ActionId) -> f64 {
        self.sweep(self.robot(ctx), self.hypothesis(state), action)
            .travelled as f64
    }
}
