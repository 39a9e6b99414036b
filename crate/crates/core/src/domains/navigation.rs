//! Grid navigation Goal-POMDPs: indoor LiDAR navigation (slip dynamics or
//! start-state uncertainty) and outdoor landmark navigation with a hazard
//! validity oracle.

use std::collections::BTreeSet;
use std::sync::Arc;

use super::dist::DistTable;
use super::grid::{
    Cell, GridMap, LidarSpec, MapFixture, MotionPrimitive, Pose, HEADINGS, HEADING_VECTORS,
};
use super::raycast::raycast;
use super::DomainError;
use crate::belief::{
    ActionId, BeliefState, GoalCriterion, GoalPomdp, Observable, ObservationId, StateId,
};

#[derive(Debug, Clone, PartialEq)]
pub enum Sensor {
    /// Raycast range vector from the reached pose.
    Lidar(LidarSpec),
    /// Bitmask of landmarks within their sensing radius.
    Landmarks,
}

#[derive(Debug, Clone, PartialEq)]
pub enum NavigationMode {
    /// Reach any cell of the region.
    GoalDirected(BTreeSet<Cell>),
    /// Localize: the belief must collapse to a single pose.
    InfoGathering,
}

/// Navigation domain over discrete poses `(x, y, heading)`.
#[derive(Debug, Clone)]
pub struct NavigationPomdp {
    map: GridMap,
    primitives: Vec<MotionPrimitive>,
    sensor: Sensor,
    mode: NavigationMode,
    slip: bool,
    hazard_validity: bool,
    start: Vec<Pose>,
    dist: Option<Arc<DistTable>>,
}

/// Weighted-particle domain: known start pose, slip cells move the robot to
/// the intended pose with probability 0.5 and laterally left or right with
/// probability 0.25 each.
pub fn indoor_stochastic_model(
    map: GridMap,
    primitives: Vec<MotionPrimitive>,
    lidar: LidarSpec,
    start: Pose,
    goal: BTreeSet<Cell>,
) -> Result<NavigationPomdp, DomainError> {
    NavigationPomdp::build(
        map,
        primitives,
        Sensor::Lidar(lidar),
        NavigationMode::GoalDirected(goal),
        true,
        false,
        vec![start],
    )
}

/// Unweighted hypothesis poses, deterministic primitives, LiDAR sensing.
pub fn indoor_start_uncertainty_model(
    map: GridMap,
    primitives: Vec<MotionPrimitive>,
    lidar: LidarSpec,
    hypotheses: Vec<Pose>,
    mode: NavigationMode,
) -> Result<NavigationPomdp, DomainError> {
    NavigationPomdp::build(
        map,
        primitives,
        Sensor::Lidar(lidar),
        mode,
        false,
        false,
        hypotheses,
    )
}

/// Deterministic landmark navigation whose bottleneck is the validity
/// oracle: an action is invalid from a pose when its trace enters a hazard cell.
pub fn outdoor_model(
    map: GridMap,
    primitives: Vec<MotionPrimitive>,
    hypotheses: Vec<Pose>,
    mode: NavigationMode,
) -> Result<NavigationPomdp, DomainError> {
    NavigationPomdp::build(
        map,
        primitives,
        Sensor::Landmarks,
        mode,
        false,
        true,
        hypotheses,
    )
}

impl NavigationPomdp {
    fn build(
        map: GridMap,
        primitives: Vec<MotionPrimitive>,
        sensor: Sensor,
        mode: NavigationMode,
        slip: bool,
        hazard_validity: bool,
        start: Vec<Pose>,
    ) -> Result<Self, DomainError> {
        map.validate()?;
        if start.is_empty() {
            return Err(DomainError::Fixture("empty hypothesis set".into()));
        }
        if primitives.is_empty() {
            return Err(DomainError::Fixture("no motion primitives".into()));
        }
        if let Sensor::Lidar(spec) = &sensor {
            spec.validate()?;
        }
        if matches!(sensor, Sensor::Landmarks) && map.landmarks.len() > 62 {
            return Err(DomainError::Fixture(
                "at most 62 landmarks are supported".into(),
            ));
        }
        for pose in &start {
            if map.is_occupied(pose.cell) {
                return Err(DomainError::Fixture(format!(
                    "start pose {pose} is occupied"
                )));
            }
        }
        if let NavigationMode::GoalDirected(goal) = &mode {
            if goal.is_empty() {
                return Err(DomainError::Fixture("empty goal region".into()));
            }
            if let Some(c) = goal.iter().find(|c| map.is_occupied(**c)) {
                return Err(DomainError::Fixture(format!("goal cell {c} is occupied")));
            }
        }
        let mut model = NavigationPomdp {
            map,
            primitives,
            sensor,
            mode,
            slip,
            hazard_validity,
            start,
            dist: None,
        };
        if let NavigationMode::GoalDirected(_) = &model.mode {
            let table = model.build_dist_table();
            for cell in model.map.free_cells() {
                for h in 0..HEADINGS {
                    let s = model.map.pose_id(Pose::new(cell.x, cell.y, h));
                    if table.get(s).is_infinite() {
                        return Err(DomainError::Fixture(format!(
                            "goal region unreachable from pose {}",
                            model.map.pose_of(s)
                        )));
                    }
                }
            }
            model.dist = Some(Arc::new(table));
        }
        Ok(model)
    }

    /// Indoor slip model from a fixture: first `S` cell, first start heading, `G` cells.
    pub fn indoor_stochastic_from(fixture: &MapFixture) -> Result<Self, DomainError> {
        let start = *fixture
            .start_poses()
            .first()
            .ok_or_else(|| DomainError::Fixture("map has no S cell".into()))?;
        indoor_stochastic_model(
            fixture.map.clone(),
            fixture.sidecar.primitives.clone(),
            fixture.sidecar.lidar.clone(),
            start,
            fixture.map.goal_cells.clone(),
        )
    }

    /// Start-uncertainty model from a fixture: every `S` pose is a hypothesis.
    pub fn indoor_start_from(
        fixture: &MapFixture,
        info_gathering: bool,
    ) -> Result<Self, DomainError> {
        let mode = if info_gathering {
            NavigationMode::InfoGathering
        } else {
            NavigationMode::GoalDirected(fixture.map.goal_cells.clone())
        };
        indoor_start_uncertainty_model(
            fixture.map.clone(),
            fixture.sidecar.primitives.clone(),
            fixture.sidecar.lidar.clone(),
            fixture.start_poses(),
            mode,
        )
    }

    pub fn outdoor_from(fixture: &MapFixture, info_gathering: bool) -> Result<Self, DomainError> {
        let mode = if info_gathering {
            NavigationMode::InfoGathering
        } else {
            NavigationMode::GoalDirected(fixture.map.goal_cells.clone())
        };
        outdoor_model(
            fixture.map.clone(),
            fixture.sidecar.primitives.clone(),
            fixture.start_poses(),
            mode,
        )
    }

    /// Same domain with a different start belief support.
    pub fn with_start(mut self, start: Vec<Pose>) -> Result<Self, DomainError> {
        if start.is_empty() || start.iter().any(|p| self.map.is_occupied(p.cell)) {
            return Err(DomainError::Fixture("invalid start poses".into()));
        }
        self.start = start;
        Ok(self)
    }

    pub fn map(&self) -> &GridMap {
        &self.map
    }

    pub fn primitives(&self) -> &[MotionPrimitive] {
        &self.primitives
    }

    pub fn mode(&self) -> &NavigationMode {
        &self.mode
    }

    pub fn start_poses(&self) -> &[Pose] {
        &self.start
    }

    pub fn pose(&self, state: StateId) -> Pose {
        self.map.pose_of(state)
    }

    pub fn state(&self, pose: Pose) -> StateId {
        self.map.pose_id(pose)
    }

    /// Optimistic-determinization cost-to-goal (goal-directed mode only).
    pub fn dist_table(&self) -> Option<Arc<DistTable>> {
        self.dist.clone()
    }

    /// Straight-line distance to the nearest goal cell; quick but can
    /// overestimate because diagonal moves cost the same as straight ones.
    pub fn euclidean_table(&self) -> Option<Arc<DistTable>> {
        let NavigationMode::GoalDirected(goal) = &self.mode else {
            return None;
        };
        let values = (0..self.map.num_poses())
            .map(|s| {
                let cell = self.map.pose_of(StateId(s as u32)).cell;
                goal.iter()
                    .map(|g| g.distance(cell))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        Some(Arc::new(DistTable::from_values(values)))
    }

    fn build_dist_table(&self) -> DistTable {
        let goals: Vec<StateId> = self
            .map
            .free_cells()
            .filter(|c| self.in_goal(*c))
            .flat_map(|c| (0..HEADINGS).map(move |h| Pose::new(c.x, c.y, h)))
            .map(|p| self.map.pose_id(p))
            .collect();
        DistTable::backward_sweep(self.map.num_poses(), &goals, |s| {
            let pose = self.map.pose_of(s);
            if self.map.is_occupied(pose.cell) {
                return Vec::new();
            }
            (0..self.primitives.len())
                .filter(|a| self.pose_applicable(pose, *a))
                .map(|a| {
                    let outcomes = self.outcomes(pose, a).into_iter().map(|(s, _)| s).collect();
                    (self.primitives[a].cost, outcomes)
                })
                .collect()
        })
    }

    fn in_goal(&self, cell: Cell) -> bool {
        match &self.mode {
            NavigationMode::GoalDirected(goal) => goal.contains(&cell),
            NavigationMode::InfoGathering => false,
        }
    }

    fn pose_applicable(&self, pose: Pose, action: usize) -> bool {
        self.primitives[action]
            .trace(pose)
            .iter()
            .all(|p| !self.map.is_occupied(p.cell))
    }

    fn outcomes(&self, pose: Pose, action: usize) -> Vec<(StateId, f64)> {
        let primitive = &self.primitives[action];
        let end = primitive.end_pose(pose);
        let intended = self.map.pose_id(end);
        if !(self.slip && primitive.displaces() && self.map.slip_cells.contains(&pose.cell)) {
            return vec![(intended, 1.0)];
        }
        let mut out = vec![(intended, 0.5)];
        for side in [2, -2] {
            let (dx, dy) = HEADING_VECTORS[end.rotate(side).heading as usize];
            let lateral = Pose {
                cell: end.cell.offset(dx, dy),
                heading: end.heading,
            };
            if self.map.is_occupied(lateral.cell) {
                out[0].1 += 0.25;
            } else {
                out.push((self.map.pose_id(lateral), 0.25));
            }
        }
        out
    }

    fn landmark_mask(&self, cell: Cell) -> u64 {
        self.map
            .landmarks
            .iter()
            .enumerate()
            .filter(|&(_, &(lm, radius))| lm.distance(cell) <= radius)
            .fold(0u64, |mask, (i, _)| mask | (1 << i))
    }
}

impl GoalPomdp for NavigationPomdp {
    fn num_states(&self) -> usize {
        self.map.num_poses()
    }

    fn num_actions(&self) -> usize {
        self.primitives.len()
    }

    fn action_name(&self, action: ActionId) -> String {
        self.primitives[action.0].name.clone()
    }

    fn initial_belief(&self) -> BeliefState {
        BeliefState::uniform(self.start.iter().map(|p| self.map.pose_id(*p)))
            .expect("start set is non-empty")
    }

    fn goal_criterion(&self) -> GoalCriterion {
        match self.mode {
            NavigationMode::GoalDirected(_) => GoalCriterion::GoalStates,
            NavigationMode::InfoGathering => GoalCriterion::Localized,
        }
    }

    fn is_goal_state(&self, state: StateId) -> bool {
        self.in_goal(self.map.pose_of(state).cell)
    }

    fn is_applicable(&self, _: Observable, state: StateId, action: ActionId) -> bool {
        self.is_goal_state(state) || self.pose_applicable(self.map.pose_of(state), action.0)
    }

    fn transition(&self, _: Observable, state: StateId, action: ActionId) -> Vec<(StateId, f64)> {
        if self.is_goal_state(state) {
            return vec![(state, 1.0)];
        }
        self.outcomes(self.map.pose_of(state), action.0)
    }

    fn observation(&self, _: Observable, next: StateId, _: ActionId) -> Vec<(ObservationId, f64)> {
        if self.is_goal_state(next) {
            return vec![(ObservationId::GOAL, 1.0)];
        }
        let pose = self.map.pose_of(next);
        let z = match &self.sensor {
            Sensor::Lidar(spec) => raycast(&self.map, pose, spec),
            Sensor::Landmarks => ObservationId::from_code(self.landmark_mask(pose.cell)),
        };
        vec![(z, 1.0)]
    }

    fn cost(&self, _: Observable, state: StateId, action: ActionId) -> f64 {
        if self.is_goal_state(state) {
            0.0
        } else {
            self.primitives[action.0].cost
        }
    }

    fn has_validity_oracle(&self) -> bool {
        self.hazard_validity
    }

    fn is_valid(&self, _: Observable, state: StateId, action: ActionId) -> bool {
        if !self.hazard_validity || self.is_goal_state(state) {
            return true;
        }
        self.primitives[action.0]
            .trace(self.map.pose_of(state))
            .iter()
            .all(|p| !self.map.hazard_cells.contains(&p.cell))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::belief::BeliefEngine;

    fn open_model(slip: &[Cell]) -> NavigationPomdp {
        let mut map = GridMap::open(7, 7);
        map.slip_cells.extend(slip.iter().copied());
        indoor_stochastic_model(
            map,
            MotionPrimitive::default_set(),
            LidarSpec::default(),
            Pose::new(2, 3, 0),
            [Cell::new(5, 3)].into_iter().collect(),
        )
        .unwrap()
    }

    #[test]
    fn slip_cell_spreads_forward_motion() {
        let m = open_model(&[Cell::new(2, 3)]);
        let engine = BeliefEngine::new(&m);
        let b = m.initial_belief();
        let b_a = engine.belief_after_action(&b, ActionId(0)).unwrap();
        let p = |x, y| b_a.probability(m.state(Pose::new(x, y, 0)));
        assert_eq!(b_a.support_size(), 3);
        assert!((p(3, 3) - 0.5).abs() < 1e-12);
        // Left of east is north (row above).
        assert!((p(3, 2) - 0.25).abs() < 1e-12);
        assert!((p(3, 4) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn slip_against_wall_clamps_to_intended() {
        let m = open_model(&[Cell::new(2, 1)]);
        let s = m.state(Pose::new(2, 1, 0));
        let out = m.transition(None, s, ActionId(0));
        assert_eq!(out.len(), 2);
        assert_eq!(out[0], (m.state(Pose::new(3, 1, 0)), 0.75));
    }

    #[test]
    fn turns_never_slip() {
        let m = open_model(&[Cell::new(2, 3)]);
        let s = m.state(Pose::new(2, 3, 0));
        assert_eq!(
            m.transition(None, s, ActionId(1)),
            vec![(m.state(Pose::new(2, 3, 1)), 1.0)]
        );
    }

    #[test]
    fn dist_on_empty_map_counts_primitive_costs() {
        let m = open_model(&[]);
        let d = m.dist_table().unwrap();
        // Facing the goal three cells away: forward-1 + forward-2 = 3.
        assert_eq!(d.get(m.state(Pose::new(2, 3, 0))), 3.0);
        // Facing away: two 45-degree turns each way is 4 x 0.5, then 3.
        assert_eq!(d.get(m.state(Pose::new(2, 3, 4))), 5.0);
        assert_eq!(d.get(m.state(Pose::new(5, 3, 2))), 0.0);
    }

    #[test]
    fn unreachable_goal_is_rejected() {
        let mut map = GridMap::open(7, 5);
        for y in 0..5 {
            map.set_occupied(Cell::new(3, y), true);
        }
        let err = indoor_stochastic_model(
            map,
            MotionPrimitive::default_set(),
            LidarSpec::default(),
            Pose::new(1, 2, 0),
            [Cell::new(5, 2)].into_iter().collect(),
        )
        .unwrap_err();
        assert!(matches!(err, DomainError::Fixture(_)));
    }

    #[test]
    fn colliding_hypothesis_blocks_action() {
        let map = GridMap::open(6, 5);
        let m = indoor_start_uncertainty_model(
            map,
            MotionPrimitive::default_set(),
            LidarSpec::default(),
            vec![Pose::new(1, 2, 0), Pose::new(4, 2, 0)],
            NavigationMode::InfoGathering,
        )
        .unwrap();
        let engine = BeliefEngine::new(&m);
        let b0 = m.initial_belief();
        assert!(!engine.is_applicable(&b0, ActionId(0)));
        assert!(engine.is_applicable(&b0, ActionId(1)));
    }

    #[test]
    fn hazard_validity_is_per_state() {
        let mut map = GridMap::open(7, 5);
        map.hazard_cells.insert(Cell::new(3, 2));
        let m = outdoor_model(
            map,
            MotionPrimitive::default_set(),
            vec![Pose::new(1, 2, 0), Pose::new(1, 1, 0)],
            NavigationMode::GoalDirected([Cell::new(5, 2)].into_iter().collect()),
        )
        .unwrap();
        let low = m.state(Pose::new(1, 2, 0));
        let high = m.state(Pose::new(1, 1, 0));
        assert!(m.is_valid(None, low, ActionId(0)));
        assert!(!m.is_valid(None, low, ActionId(3)));
        assert!(m.is_valid(None, high, ActionId(3)));
        let engine = BeliefEngine::new(&m);
        assert!(!engine.check_validity(&m.initial_belief(), ActionId(3)));
        assert!(engine.ledger().validity_queries >= 1);
    }
}
