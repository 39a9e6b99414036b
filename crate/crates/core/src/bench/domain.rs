use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::{DomainSpec, HeuristicKind, MapSource, Mode, SolverSpec};
use super::BenchError;
use crate::belief::{
    BeliefHeuristic, ExpectedStateHeuristic, GoalPomdp, HypothesisCount, StateHeuristic,
    ZeroHeuristic,
};
use crate::domains::{
    contact_toy_model, corridor, fixtures, hypothesis_block, indoor_stochastic_model, line_world,
    DistTable, MapFixture, NavigationPomdp,
};
use crate::estimators::Estimator;

/// A domain instance for one seed, with the tables its heuristics need.
pub struct BuiltDomain {
    model: Box<dyn GoalPomdp>,
    dist: Option<Arc<DistTable>>,
    euclidean: Option<Arc<DistTable>>,
}

fn config_err(e: impl std::fmt::Display) -> BenchError {
    BenchError::Config(e.to_string())
}

fn load_map(src: &MapSource) -> Result<MapFixture, BenchError> {
    match src {
        MapSource::Fixture(name) => fixtures::fixture(name).map_err(config_err),
        MapSource::Path(p) => MapFixture::load(p).map_err(config_err),
    }
}

impl BuiltDomain {
    pub fn build(spec: &DomainSpec, seed: u64) -> Result<Self, BenchError> {
        let nav = |m: NavigationPomdp| BuiltDomain {
            dist: m.dist_table(),
            euclidean: m.euclidean_table(),
            model: Box::new(m),
        };
        Ok(match spec {
            DomainSpec::LineWorld { start } => {
                let mut w = line_world();
                if let Some(s) = start {
                    if s.is_empty() || s.iter().any(|&x| x >= 5) {
                        return Err(config_err(
                            "line-world start must be a non-empty subset of 0..5",
                        ));
                    }
                    w = w.with_start(s.clone());
                }
                BuiltDomain {
                    dist: Some(w.dist_table()),
                    euclidean: Some(w.dist_table()),
                    model: Box::new(w),
                }
            }
            DomainSpec::Corridor { length } => {
                let w = corridor(*length);
                BuiltDomain {
                    dist: Some(w.dist_table()),
                    euclidean: Some(w.dist_table()),
                    model: Box::new(w),
                }
            }
            DomainSpec::IndoorSlip {
                map,
                random_start_goal,
                min_separation,
            } => {
                let fx = load_map(map)?;
                if *random_start_goal {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    let (start, goal) = fixtures::random_start_goal(&fx, &mut rng, *min_separation);
                    nav(indoor_stochastic_model(
                        fx.map,
                        fx.sidecar.primitives,
                        fx.sidecar.lidar,
                        start,
                        [goal].into_iter().collect(),
                    )
                    .map_err(config_err)?)
                } else {
                    nav(NavigationPomdp::indoor_stochastic_from(&fx).map_err(config_err)?)
                }
            }
            DomainSpec::IndoorStart { map, mode } => {
                let fx = load_map(map)?;
                nav(
                    NavigationPomdp::indoor_start_from(&fx, *mode == Mode::InfoGathering)
                        .map_err(config_err)?,
                )
            }
            DomainSpec::Outdoor { map, mode } => {
                let fx = load_map(map)?;
                nav(
                    NavigationPomdp::outdoor_from(&fx, *mode == Mode::InfoGathering)
                        .map_err(config_err)?,
                )
            }
            DomainSpec::Contact { cols, rows } => BuiltDomain {
                model: Box::new(
                    contact_toy_model(hypothesis_block(*cols, *rows)).map_err(config_err)?,
                ),
                dist: None,
                euclidean: None,
            },
        })
    }

    pub fn model(&self) -> &dyn GoalPomdp {
        &*self.model
    }

    pub fn dist_table(&self) -> Option<Arc<DistTable>> {
        self.dist.clone()
    }

    fn alpha(solver: &SolverSpec) -> f64 {
        solver.estimator.as_ref().map_or(0.1, |e| e.alpha)
    }

    pub fn heuristic(&self, solver: &SolverSpec) -> Result<Arc<dyn BeliefHeuristic>, BenchError> {
        let table = |t: &Option<Arc<DistTable>>, name: &str| {
            t.clone()
                .ok_or_else(|| config_err(format!("heuristic {name} needs a goal-directed domain")))
        };
        Ok(match solver.heuristic {
            HeuristicKind::Dist => Arc::new(ExpectedStateHeuristic(table(&self.dist, "dist")?)),
            HeuristicKind::Euclidean => {
                Arc::new(ExpectedStateHeuristic(table(&self.euclidean, "euclidean")?))
            }
            HeuristicKind::Entropy => Arc::new(HypothesisCount {
                alpha: Self::alpha(solver),
            }),
            HeuristicKind::Zero => Arc::new(ZeroHeuristic),
        })
    }

    /// The solver's estimator, seeded per run. Q^MDP and the decomposed
    /// estimator use the Dist table when there is one, zero otherwise.
    pub fn estimator(
        &self,
        solver: &SolverSpec,
        seed: u64,
    ) -> Result<Option<Estimator>, BenchError> {
        let Some(cfg) = &solver.estimator else {
            return Ok(None);
        };
        let mut cfg = cfg.clone();
        cfg.seed ^= seed;
        let state: Arc<dyn StateHeuristic> = match &self.dist {
            Some(d) => d.clone(),
            None => Arc::new(ZeroHeuristic),
        };
        let est = Estimator::new(cfg)
            .map_err(config_err)?
            .with_heuristic(self.heuristic(solver)?)
            .with_state_heuristic(state);
        Ok(Some(est))
    }
}
