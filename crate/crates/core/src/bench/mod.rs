//! Scenario matrices: load a config, run every `(solver, seed)` cell, write
//! `runs.csv`, `summary.csv` and `meta.json`.

mod config;
mod domain;
mod report;
pub mod verify;

pub use config::{
    DomainSpec, HeuristicKind, MapSource, Mode, RunSpec, ScenarioConfig, SolverKind, SolverSpec,
};
pub use domain::BuiltDomain;
pub use report::{summarize, write_outputs, SummaryRow, RUNS_COLUMNS, SUMMARY_COLUMNS};

use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::belief::BeliefEngine;
use crate::solvers::{
    evaluate_policy, fh_lazy, lao_star, lazy_lao_star, lazy_rtdp_bel, rtdp_bel, EvalMode, FhConfig,
    InnerSolver, SolverConfig, SolverResult,
};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("config: {0}")]
    Config(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

/// Policies up to this many beliefs are evaluated exactly.
pub const EXACT_EVAL_LIMIT: usize = 20_000;

/// Rollout step cap for Monte-Carlo policy evaluation.
const ROLLOUT_MAX_STEPS: usize = 100_000;

/// One row of `runs.csv`. Field order is the column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub scenario: String,
    pub domain: String,
    pub solver: String,
    pub estimator: String,
    pub heuristic: String,
    pub seed: u64,
    pub success: bool,
    pub converged: bool,
    pub wall_time_s: f64,
    pub value: Option<f64>,
    pub policy_cost: Option<f64>,
    /// `exact`, `monte-carlo` or empty.
    pub cost_mode: String,
    pub transition_queries: u64,
    pub observation_queries: u64,
    pub validity_queries: u64,
    pub belief_transitions: u64,
    pub trials: u64,
    pub expansions: u64,
    pub evaluations: u64,
    pub replans: u64,
    pub error: String,
}

impl RunRecord {
    fn failed(cfg: &ScenarioConfig, run: &RunSpec, error: String) -> Self {
        RunRecord {
            scenario: cfg.name.clone(),
            domain: cfg.domain.id().into(),
            solver: run.solver.label(),
            estimator: run.solver.estimator_label(),
            heuristic: run.solver.heuristic_label().into(),
            seed: run.seed,
            success: false,
            converged: false,
            wall_time_s: 0.0,
            value: None,
            policy_cost: None,
            cost_mode: String::new(),
            transition_queries: 0,
            observation_queries: 0,
            validity_queries: 0,
            belief_transitions: 0,
            trials: 0,
            expansions: 0,
            evaluations: 0,
            replans: 0,
            error,
        }
    }
}

/// Solver settings for one run.
pub fn solver_config(cfg: &ScenarioConfig, run: &RunSpec) -> SolverConfig {
    let mut sc = SolverConfig {
        epsilon_residual: cfg.epsilon_residual,
        timeout_secs: Some(cfg.timeout_secs),
        inflation: cfg.inflation,
        seed: run.seed,
        validation: run.solver.validation,
        ..SolverConfig::default()
    };
    if let Some(t) = run.solver.max_trials {
        sc.max_trials = t;
    }
    sc
}

/// Runs one matrix cell. Solver failures and timeouts become unsuccessful
/// records; only an unbuildable domain is a config error.
pub fn run_one(cfg: &ScenarioConfig, run: &RunSpec) -> Result<RunRecord, BenchError> {
    let domain = BuiltDomain::build(&cfg.domain, run.seed)?;
    let heuristic = domain.heuristic(&run.solver)?;
    let estimator = domain.estimator(&run.solver, run.seed)?;
    let model = domain.model();
    let engine =
        BeliefEngine::new(model).with_query_delay(Duration::from_micros(cfg.query_delay_us));
    let sc = solver_config(cfg, run);

    let start = Instant::now();
    let outcome = match run.solver.kind {
        SolverKind::RtdpBel => rtdp_bel(&engine, &*heuristic, &sc),
        SolverKind::LazyRtdpBel => lazy_rtdp_bel(&engine, &*heuristic, need(&estimator)?, &sc),
        SolverKind::LaoStar => lao_star(&engine, &*heuristic, &sc),
        SolverKind::LazyLaoStar => lazy_lao_star(&engine, &*heuristic, need(&estimator)?, &sc),
        SolverKind::FhLazy => {
            let fh = FhConfig {
                inner: run.solver.inner.unwrap_or(InnerSolver::LazyLaoStar),
                restart: run.solver.restart,
                ..FhConfig::default()
            };
            fh_lazy(&engine, &*heuristic, estimator.as_ref(), &sc, &fh)
        }
    };
    let wall = start.elapsed().as_secs_f64();
    let result = match outcome {
        Ok(r) => r,
        Err(e) => {
            let mut rec = RunRecord::failed(cfg, run, e.to_string());
            rec.wall_time_s = wall;
            let l = engine.ledger();
            rec.transition_queries = l.transition_queries;
            rec.observation_queries = l.observation_queries;
            rec.validity_queries = l.validity_queries;
            rec.belief_transitions = l.belief_transitions_computed;
            return Ok(rec);
        }
    };
    Ok(record(cfg, run, &result, model, wall))
}

fn need<T>(e: &Option<T>) -> Result<&T, BenchError> {
    e.as_ref()
        .ok_or_else(|| BenchError::Config("lazy solver without an estimator".into()))
}

fn record(
    cfg: &ScenarioConfig,
    run: &RunSpec,
    r: &SolverResult,
    model: &dyn crate::belief::GoalPomdp,
    wall: f64,
) -> RunRecord {
    let mut rec = RunRecord::failed(cfg, run, String::new());
    rec.converged = r.converged;
    rec.wall_time_s = wall;
    rec.value = Some(r.value);
    rec.transition_queries = r.ledger.transition_queries;
    rec.observation_queries = r.ledger.observation_queries;
    rec.validity_queries = r.ledger.validity_queries;
    rec.belief_transitions = r.ledger.belief_transitions_computed;
    rec.trials = r.stats.trials;
    rec.expansions = r.stats.expansions;
    rec.evaluations = r.stats.evaluations;
    rec.replans = r.stats.replans;

    match &r.policy {
        Some(policy) => {
            let (mode, label) = if policy.len() <= EXACT_EVAL_LIMIT {
                (EvalMode::Exact, "exact")
            } else {
                (
                    EvalMode::MonteCarlo {
                        rollouts: cfg.rollouts,
                        seed: run.seed,
                        max_steps: ROLLOUT_MAX_STEPS,
                    },
                    "monte-carlo",
                )
            };
            match evaluate_policy(policy, model, mode) {
                Ok(c) => {
                    rec.policy_cost = Some(c);
                    rec.cost_mode = label.into();
                }
                Err(e) => rec.error = e.to_string(),
            }
        }
        None => rec.error = r.policy_error.clone().unwrap_or_default(),
    }
    if !r.converged && rec.error.is_empty() {
        rec.error = "not converged".into();
    }
    rec.success = r.converged && rec.policy_cost.is_some_and(f64::is_finite);
    rec
}

/// Builds every seed's domain, heuristic and estimator without solving, so
/// configuration mistakes surface before any run starts.
pub fn preflight(cfg: &ScenarioConfig) -> Result<(), BenchError> {
    for &seed in &cfg.seeds {
        let domain = BuiltDomain::build(&cfg.domain, seed)?;
        for s in &cfg.solvers {
            domain.heuristic(s)?;
            domain.estimator(s, seed)?;
            if s.kind == SolverKind::FhLazy && !domain.model().has_validity_oracle() {
                return Err(BenchError::Config(format!(
                    "{}: {} has no validity oracle",
                    s.label(),
                    cfg.domain.id()
                )));
            }
        }
    }
    Ok(())
}

/// Runs the whole matrix on `workers` threads. Records come back in
/// [`ScenarioConfig::expand`] order whatever the scheduling.
pub fn run_matrix(cfg: &ScenarioConfig, workers: usize) -> Result<Vec<RunRecord>, BenchError> {
    preflight(cfg)?;
    let runs = cfg.expand();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| BenchError::Config(e.to_string()))?;
    pool.install(|| runs.par_iter().map(|r| run_one(cfg, r)).collect())
}
