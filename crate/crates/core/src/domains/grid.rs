//! ASCII occupancy maps, discrete poses and motion primitives.

use std::collections::BTreeSet;
use std::fmt;

use serde::Deserialize;

use super::DomainError;
use crate::belief::StateId;

/// Number of discrete headings (45 degree resolution).
pub const HEADINGS: u8 = 8;

/// Unit cell offsets per heading, counter-clockwise from east. Rows grow
/// downward, so "north" is `dy = -1`.
pub const HEADING_VECTORS: [(i32, i32); 8] = [
    (1, 0),
    (1, -1),
    (0, -1),
    (-1, -1),
    (-1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cell {
    pub x: i32,
    pub y: i32,
}

impl Cell {
    pub fn new(x: i32, y: i32) -> Self {
        Cell { x, y }
    }

    pub fn offset(self, dx: i32, dy: i32) -> Self {
        Cell::new(self.x + dx, self.y + dy)
    }

    pub fn distance(self, other: Cell) -> f64 {
        let dx = (self.x - other.x) as f64;
        let dy = (self.y - other.y) as f64;
        (dx * dx + dy * dy).sqrt()
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pose {
    pub cell: Cell,
    pub heading: u8,
}

impl Pose {
    pub fn new(x: i32, y: i32, heading: u8) -> Self {
        Pose {
            cell: Cell::new(x, y),
            heading: heading % HEADINGS,
        }
    }

    pub fn forward(self, cells: i32) -> Self {
        let (dx, dy) = HEADING_VECTORS[self.heading as usize];
        Pose {
            cell: self.cell.offset(dx * cells, dy * cells),
            heading: self.heading,
        }
    }

    pub fn rotate(self, steps: i32) -> Self {
        let h = (self.heading as i32 + steps).rem_euclid(HEADINGS as i32) as u8;
        Pose {
            cell: self.cell,
            heading: h,
        }
    }
}

impl fmt::Display for Pose {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.cell.x, self.cell.y, self.heading)
    }
}

/// Occupancy grid with annotated slip, hazard, landmark, goal and start cells.
#[derive(Debug, Clone, PartialEq)]
pub struct GridMap {
    width: i32,
    height: i32,
    occupied: Vec<bool>,
    pub slip_cells: BTreeSet<Cell>,
    pub hazard_cells: BTreeSet<Cell>,
    pub landmarks: Vec<(Cell, f64)>,
    pub goal_cells: BTreeSet<Cell>,
    pub start_cells: Vec<Cell>,
}

impl GridMap {
    /// Parses the ASCII format: `#` occupied, `.` free, `~` slip, `!` hazard,
    /// `L` landmark, `G` goal, `S` start. Landmarks get `landmark_radius`.
    pub fn parse(text: &str, landmark_radius: f64) -> Result<Self, DomainError> {
        let rows: Vec<&str> = text
            .lines()
            .map(str::trim_end)
            .filter(|l| !l.is_empty())
            .collect();
        if rows.is_empty() {
            return Err(DomainError::MapFormat("empty map".into()));
        }
        let width = rows[0].chars().count();
        let height = rows.len();
        let mut map = GridMap {
            width: width as i32,
            height: height as i32,
            occupied: vec![false; width * height],
            slip_cells: BTreeSet::new(),
            hazard_cells: BTreeSet::new(),
            landmarks: Vec::new(),
            goal_cells: BTreeSet::new(),
            start_cells: Vec::new(),
        };
        for (y, row) in rows.iter().enumerate() {
            if row.chars().count() != width {
                return Err(DomainError::MapFormat(format!(
                    "row {y} has {} cells, expected {width}",
                    row.chars().count()
                )));
            }
            for (x, ch) in row.chars().enumerate() {
                let cell = Cell::new(x as i32, y as i32);
                match ch {
                    '#' => map.occupied[y * width + x] = true,
                    '.' => {}
                    '~' => {
                        map.slip_cells.insert(cell);
                    }
                    '!' => {
                        map.hazard_cells.insert(cell);
                    }
                    'L' => map.landmarks.push((cell, landmark_radius)),
                    'G' => {
                        map.goal_cells.insert(cell);
                    }
                    'S' => map.start_cells.push(cell),
                    other => {
                        return Err(DomainError::MapFormat(format!(
                            "unknown map character {other:?} at ({x}, {y})"
                        )))
                    }
                }
            }
        }
        for x in 0..map.width {
            for y in [0, map.height - 1] {
                if !map.is_occupied(Cell::new(x, y)) {
                    return Err(DomainError::MapFormat(format!(
                        "border cell ({x}, {y}) is free"
                    )));
                }
            }
        }
        for y in 0..map.height {
            for x in [0, map.width - 1] {
                if !map.is_occupied(Cell::new(x, y)) {
                    return Err(DomainError::MapFormat(format!(
                        "border cell ({x}, {y}) is free"
                    )));
                }
            }
        }
        Ok(map)
    }

    /// Empty map of the given size with an occupied border.
    pub fn open(width: i32, height: i32) -> Self {
        let mut occupied = vec![false; (width * height) as usize];
        for y in 0..height {
            for x in 0..width {
                if x == 0 || y == 0 || x == width - 1 || y == height - 1 {
                    occupied[(y * width + x) as usize] = true;
                }
            }
        }
        GridMap {
            width,
            height,
            occupied,
            slip_cells: BTreeSet::new(),
            hazard_cells: BTreeSet::new(),
            landmarks: Vec::new(),
            goal_cells: BTreeSet::new(),
            start_cells: Vec::new(),
        }
    }

    pub fn width(&self) -> i32 {
        self.width
    }

    pub fn height(&self) -> i32 {
        self.height
    }

    pub fn in_bounds(&self, cell: Cell) -> bool {
        cell.x >= 0 && cell.y >= 0 && cell.x < self.width && cell.y < self.height
    }

    /// Out-of-bounds cells count as occupied.
    pub fn is_occupied(&self, cell: Cell) -> bool {
        !self.in_bounds(cell) || self.occupied[(cell.y * self.width + cell.x) as usize]
    }

    pub fn set_occupied(&mut self, cell: Cell, occupied: bool) {
        if self.in_bounds(cell) {
            self.occupied[(cell.y * self.width + cell.x) as usize] = occupied;
        }
    }

    pub fn free_cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.height)
            .flat_map(move |y| (0..self.width).map(move |x| Cell::new(x, y)))
            .filter(move |c| !self.is_occupied(*c))
    }

    pub fn num_poses(&self) -> usize {
        (self.width * self.height) as usize * HEADINGS as usize
    }

    pub fn pose_id(&self, pose: Pose) -> StateId {
        let cell = (pose.cell.y * self.width + pose.cell.x) as u32;
        StateId(cell * HEADINGS as u32 + pose.heading as u32)
    }

    pub fn pose_of(&self, state: StateId) -> Pose {
        let cell = state.0 / HEADINGS as u32;
        let heading = (state.0 % HEADINGS as u32) as u8;
        Pose::new(
            (cell % self.width as u32) as i32,
            (cell / self.width as u32) as i32,
            heading,
        )
    }

    /// Checks the closed-world and annotation invariants.
    pub fn validate(&self) -> Result<(), DomainError> {
        let annotated = self
            .slip_cells
            .iter()
            .chain(self.hazard_cells.iter())
            .chain(self.goal_cells.iter())
            .chain(self.start_cells.iter())
            .chain(self.landmarks.iter().map(|(c, _)| c));
        for cell in annotated {
            if self.is_occupied(*cell) {
                return Err(DomainError::MapFormat(format!(
                    "annotated cell {cell} is occupied or out of bounds"
                )));
            }
        }
        Ok(())
    }
}

/// One segment of a primitive: advance along the current heading, then rotate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
pub struct Step {
    pub advance: i32,
    #[serde(default)]
    pub rotate: i32,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct MotionPrimitive {
    pub name: String,
    pub steps: Vec<Step>,
    pub cost: f64,
}

impl MotionPrimitive {
    pub fn forward(name: &str, cells: i32, cost: f64) -> Self {
        MotionPrimitive {
            name: name.into(),
            steps: vec![Step {
                advance: cells,
                rotate: 0,
            }],
            cost,
        }
    }

    pub fn turn(name: &str, rotate: i32, cost: f64) -> Self {
        MotionPrimitive {
            name: name.into(),
            steps: vec![Step { advance: 0, rotate }],
            cost,
        }
    }

    /// `{forward-1, turn-left, turn-right, forward-2}` at costs `{1, 0.5, 0.5, 2}`.
    pub fn default_set() -> Vec<MotionPrimitive> {
        vec![
            MotionPrimitive::forward("forward-1", 1, 1.0),
            MotionPrimitive::turn("turn-left", 1, 0.5),
            MotionPrimitive::turn("turn-right", -1, 0.5),
            MotionPrimitive::forward("forward-2", 2, 2.0),
        ]
    }

    /// Poses visited cell by cell, ending at the final pose. Empty for the
    /// identity primitive.
    pub fn trace(&self, start: Pose) -> Vec<Pose> {
        let mut pose = start;
        let mut out = Vec::new();
        for step in &self.steps {
            for _ in 0..step.advance {
                pose = pose.forward(1);
                out.push(pose);
            }
            if step.rotate != 0 {
                pose = pose.rotate(step.rotate);
                out.push(pose);
            }
        }
        out
    }

    pub fn end_pose(&self, start: Pose) -> Pose {
        self.trace(start).last().copied().unwrap_or(start)
    }

    pub fn displaces(&self) -> bool {
        self.steps.iter().any(|s| s.advance != 0)
    }
}

/// 1-D LiDAR: rays at fixed angles relative to the heading, integer ranges
/// in cells, quantized into bins.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default)]
pub struct LidarSpec {
    /// Ray angles in degrees, counter-clockwise from the heading.
    pub rays: Vec<f64>,
    pub max_range: u32,
    pub quantization: u32,
}

impl Default for LidarSpec {
    fn default() -> Self {
        LidarSpec {
            rays: (0..8).map(|i| i as f64 * 45.0).collect(),
            max_range: 10,
            quantization: 1,
        }
    }
}

impl LidarSpec {
    pub fn bins(&self) -> u64 {
        (self.max_range / self.quantization) as u64 + 1
    }

    pub fn validate(&self) -> Result<(), DomainError> {
        if self.rays.is_empty() {
            return Err(DomainError::Config("lidar needs at least one ray".into()));
        }
        if self.quantization == 0 {
            return Err(DomainError::Config(
                "lidar quantization must be >= 1".into(),
            ));
        }
        let bins = self.bins() as f64;
        if bins.powi(self.rays.len() as i32) >= u64::MAX as f64 / 2.0 {
            return Err(DomainError::Config(
                "lidar observation space overflows u64".into(),
            ));
        }
        Ok(())
    }
}

fn default_landmark_radius() -> f64 {
    2.5
}

fn default_headings() -> Vec<u8> {
    vec![0]
}

/// Settings stored next to a map file.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default)]
pub struct Sidecar {
    pub lidar: LidarSpec,
    #[serde(rename = "primitive")]
    pub primitives: Vec<MotionPrimitive>,
    #[serde(default = "default_landmark_radius")]
    pub landmark_radius: f64,
    /// Headings assigned to every `S` cell.
    #[serde(default = "default_headings")]
    pub start_headings: Vec<u8>,
}

impl Default for Sidecar {
    fn default() -> Self {
        Sidecar {
            lidar: LidarSpec::default(),
            primitives: MotionPrimitive::default_set(),
            landmark_radius: default_landmark_radius(),
            start_headings: default_headings(),
        }
    }
}

impl Sidecar {
    pub fn parse(text: &str) -> Result<Self, DomainError> {
        let sidecar: Sidecar =
            toml::from_str(text).map_err(|e| DomainError::Config(e.to_string()))?;
        sidecar.lidar.validate()?;
        if sidecar.primitives.is_empty() {
            return Err(DomainError::Config("no motion primitives".into()));
        }
        if sidecar.primitives.iter().any(|p| p.cost <= 0.0) {
            return Err(DomainError::Config(
                "primitive costs must be positive".into(),
            ));
        }
        Ok(sidecar)
    }
}

/// A map together with its sidecar.
#[derive(Debug, Clone, PartialEq)]
pub struct MapFixture {
    pub map: GridMap,
    pub sidecar: Sidecar,
}

impl MapFixture {
    pub fn parse(map_text: &str, sidecar_text: Option<&str>) -> Result<Self, DomainError> {
        let sidecar = match sidecar_text {
            Some(t) => Sidecar::parse(t)?,
            None => Sidecar::default(),
        };
        let map = GridMap::parse(map_text, sidecar.landmark_radius)?;
        map.validate()?;
        Ok(MapFixture { map, sidecar })
    }

    /// Loads `path` and, when present, the sidecar with the same stem and a
    /// `.toml` extension.
    pub fn load(path: &std::path::Path) -> Result<Self, DomainError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| DomainError::Config(format!("{}: {e}", path.display())))?;
        let sidecar_path = path.with_extension("toml");
        let sidecar = if sidecar_path.exists() {
            Some(
                std::fs::read_to_string(&sidecar_path)
                    .map_err(|e| DomainError::Config(format!("{}: {e}", sidecar_path.display())))?,
            )
        } else {
            None
        };
        Self::parse(&text, sidecar.as_deref())
    }

    /// Start poses: every `S` cell under every configured start heading.
    pub fn start_poses(&self) -> Vec<Pose> {
        let mut poses = Vec::new();
        for cell in &self.map.start_cells {
            for h in &self.sidecar.start_headings {
                poses.push(Pose::new(cell.x, cell.y, *h));
            }
        }
        poses
    }
}
