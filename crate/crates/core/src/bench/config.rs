use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::BenchError;
use crate::estimators::EstimatorConfig;
use crate::solvers::{InnerSolver, Restart, ValidationMode};

/// One benchmark file: a domain, the solver variants to compare on it, and
/// the seeds every variant runs with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub seeds: Vec<u64>,
    #[serde(default = "default_timeout")]
    pub timeout_secs: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon_residual: f64,
    #[serde(default = "default_inflation")]
    pub inflation: f64,
    /// Artificial latency per model query, in microseconds.
    #[serde(default)]
    pub query_delay_us: u64,
    /// Rollouts used when a policy is too large for exact evaluation.
    #[serde(default = "default_rollouts")]
    pub rollouts: usize,
    /// Output directory; `run --out` takes precedence.
    #[serde(default)]
    pub output: Option<PathBuf>,
    pub domain: DomainSpec,
    #[serde(rename = "solver")]
    pub solvers: Vec<SolverSpec>,
}

fn default_timeout() -> f64 {
    300.0
}

fn default_epsilon() -> f64 {
    1e-9
}

fn default_inflation() -> f64 {
    1.0
}

fn default_rollouts() -> usize {
    10_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DomainSpec {
    LineWorld {
        #[serde(default)]
        start: Option<Vec<u32>>,
    },
    Corridor {
        length: u32,
    },
    /// Known start pose, slip cells.
    IndoorSlip {
        map: MapSource,
        /// Draw start pose and goal cell from the seed instead of using the
        /// map's `S` and `G` cells.
        #[serde(default)]
        random_start_goal: bool,
        #[serde(default = "default_separation")]
        min_separation: f64,
    },
    /// Every `S` pose is an equally likely start hypothesis.
    IndoorStart {
        map: MapSource,
        #[serde(default)]
        mode: Mode,
    },
    Outdoor {
        map: MapSource,
        #[serde(default)]
        mode: Mode,
    },
    /// Contact localization over a `cols × rows` hypothesis block; the
    /// default 10×10 block is the planted-partition world.
    Contact {
        #[serde(default = "default_block")]
        cols: u32,
        #[serde(default = "default_block")]
        rows: u32,
    },
}

fn default_separation() -> f64 {
    6.0
}

fn default_block() -> u32 {
    10
}

impl DomainSpec {
    pub fn id(&self) -> &'static str {
        match self {
            DomainSpec::LineWorld { .. } => "line-world",
            DomainSpec::Corridor { .. } => "corridor",
            DomainSpec::IndoorSlip { .. } => "indoor-slip",
            DomainSpec::IndoorStart { .. } => "indoor-start",
            DomainSpec::Outdoor { .. } => "outdoor",
            DomainSpec::Contact { .. } => "contact",
        }
    }
}

/// A committed fixture by name, or a map file (sidecar alongside).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum MapSource {
    Fixture(String),
    Path(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    #[default]
    GoalDirected,
    InfoGathering,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverKind {
    RtdpBel,
    LazyRtdpBel,
    LaoStar,
    LazyLaoStar,
    FhLazy,
}

impl SolverKind {
    pub fn needs_estimator(self) -> bool {
        matches!(self, SolverKind::LazyRtdpBel | SolverKind::LazyLaoStar)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HeuristicKind {
    /// Expected optimistic-determinization distance to the goal.
    #[default]
    Dist,
    /// Expected straight-line distance; fast, not admissible.
    Euclidean,
    /// `alpha * |H|`.
    Entropy,
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    /// Label used in the CSV; defaults to the solver id.
    #[serde(default)]
    pub label: Option<String>,
    pub kind: SolverKind,
    #[serde(default)]
    pub heuristic: HeuristicKind,
    #[serde(default)]
    pub estimator: Option<EstimatorConfig>,
    #[serde(default)]
    pub validation: ValidationMode,
    /// Inner planner and restart policy of `fh-lazy`.
    #[serde(default)]
    pub inner: Option<InnerSolver>,
    #[serde(default)]
    pub restart: Restart,
    #[serde(default)]
    pub max_trials: Option<usize>,
}

impl SolverSpec {
    pub fn label(&self) -> String {
        self.label.clone().unwrap_or_else(|| {
            serde_json::to_value(self.kind)
                .ok()
                .and_then(|v| v.as_str().map(str::to_owned))
                .unwrap_or_default()
        })
    }

    pub fn estimator_label(&self) -> String {
        self.estimator
            .as_ref()
            .and_then(|e| serde_json::to_value(e.kind).ok())
            .and_then(|v| v.as_str().map(str::to_owned))
            .unwrap_or_else(|| "none".into())
    }

    pub fn heuristic_label(&self) -> &'static str {
        match self.heuristic {
            HeuristicKind::Dist => "dist",
            HeuristicKind::Euclidean => "euclidean",
            HeuristicKind::Entropy => "entropy",
            HeuristicKind::Zero => "zero",
        }
    }
}

/// One `(solver variant, seed)` cell of the matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSpec {
    pub scenario: String,
    pub index: usize,
    pub solver: SolverSpec,
    pub seed: u64,
}

impl ScenarioConfig {
    pub fn parse(text: &str, base: Option<&Path>) -> Result<Self, BenchError> {
        let mut cfg: ScenarioConfig =
            toml::from_str(text).map_err(|e| BenchError::Config(e.to_string()))?;
        if let Some(base) = base {
            cfg.resolve_paths(base);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, BenchError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| BenchError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text, path.parent())
    }

    fn resolve_paths(&mut self, base: &Path) {
        let map = match &mut self.domain {
            DomainSpec::IndoorSlip { map, .. }
            | DomainSpec::IndoorStart { map, .. }
            | DomainSpec::Outdoor { map, .. } => map,
            _ => return,
        };
        if let MapSource::Path(p) = map {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let err = |m: String| Err(BenchError::Config(m));
        if self.seeds.is_empty() {
            return err("seeds must not be empty".into());
        }
        if self.solvers.is_empty() {
            return err("at least one [[solver]] is required".into());
        }
        if !(self.timeout_secs > 0.0) {
            return err("timeout_secs must be positive".into());
        }
        if !(self.epsilon_residual > 0.0) {
            return err("epsilon_residual must be positive".into());
        }
        if !(self.inflation >= 1.0) {
            return err("inflation must be at least 1".into());
        }
        if self.rollouts == 0 {
            return err("rollouts must be positive".into());
        }
        match &self.domain {
            DomainSpec::IndoorSlip { map, .. }
            | DomainSpec::IndoorStart { map, .. }
            | DomainSpec::Outdoor { map, .. } => match map {
                MapSource::Path(p) if !p.exists() => {
                    return err(format!("map file {} does not exist", p.display()))
                }
                MapSource::Fixture(name)
                    if !crate::domains::fixtures::names().any(|n| n == name) =>
                {
                    return err(format!("unknown fixture {name:?}"))
                }
                _ => {}
            },
            DomainSpec::Corridor { length: 0 } => {
                return err("corridor length must be positive".into())
            }
            DomainSpec::Contact { cols, rows } if *cols == 0 || *rows == 0 => {
                return err("contact block must be non-empty".into())
            }
            _ => {}
        }
        let mut labels = std::collections::BTreeSet::new();
        for s in &self.solvers {
            let label = s.label();
            if !labels.insert(label.clone()) {
                return err(format!("duplicate solver label {label:?}"));
            }
            if s.kind.needs_estimator() && s.estimator.is_none() {
                return err(format!("{label}: lazy solvers need an [solver.estimator]"));
            }
            if s.kind == SolverKind::FhLazy {
                let inner = s.inner.unwrap_or(InnerSolver::LazyLaoStar);
                if inner.is_lazy() && s.estimator.is_none() {
                    return err(format!(
                        "{label}: lazy inner solver needs an [solver.estimator]"
                    ));
                }
            }
            if let Some(e) = &s.estimator {
                e.validate()
                    .map_err(|e| BenchError::Config(format!("{label}: {e}")))?;
            }
        }
        Ok(())
    }

    /// All runs in output order: solver variants outer, seeds inner.
    pub fn expand(&self) -> Vec<RunSpec> {
        let mut runs = Vec::new();
        for solver in &self.solvers {
            for &seed in &self.seeds {
                runs.push(RunSpec {
                    scenario: format!("{}/{}", self.name, solver.label()),
                    index: runs.len(),
                    solver: solver.clone(),
                    seed,
                });
            }
        }
        runs
    }
}
