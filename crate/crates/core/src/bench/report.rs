use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{BenchError, RunRecord, ScenarioConfig};

pub const RUNS_COLUMNS: &[&str] = &[
    "scenario",
    "domain",
    "solver",
    "estimator",
    "heuristic",
    "seed",
    "success",
    "converged",
    "wall_time_s",
    "value",
    "policy_cost",
    "cost_mode",
    "transition_queries",
    "observation_queries",
    "validity_queries",
    "belief_transitions",
    "trials",
    "expansions",
    "evaluations",
    "replans",
    "error",
];

pub const SUMMARY_COLUMNS: &[&str] = &[
    "scenario",
    "solver",
    "estimator",
    "heuristic",
    "runs",
    "successes",
    "success_rate",
    "included",
    "common_runs",
    "mean_wall_time_s",
    "mean_belief_transitions",
    "mean_validity_queries",
    "mean_policy_cost",
];

/// Solvers below this success rate are left out of the averaged columns.
pub const INCLUSION_RATE: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub scenario: String,
    pub solver: String,
    pub estimator: String,
    pub heuristic: String,
    pub runs: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub included: bool,
    /// Seeds on which every included solver succeeded.
    pub common_runs: usize,
    pub mean_wall_time_s: Option<f64>,
    pub mean_belief_transitions: Option<f64>,
    pub mean_validity_queries: Option<f64>,
    pub mean_policy_cost: Option<f64>,
}

/// One row per solver, in first-appearance order. Averages run over the
/// seeds where all solvers with at least 20% success succeeded.
pub fn summarize(records: &[RunRecord]) -> Vec<SummaryRow> {
    let mut groups: Vec<(&str, Vec<&RunRecord>)> = Vec::new();
    for r in records {
        match groups.iter_mut().find(|(s, _)| *s == r.solver) {
            Some((_, g)) => g.push(r),
            None => groups.push((&r.solver, vec![r])),
        }
    }
    let rate = |g: &[&RunRecord]| g.iter().filter(|r| r.success).count() as f64 / g.len() as f64;
    let included: Vec<bool> = groups
        .iter()
        .map(|(_, g)| rate(g) >= INCLUSION_RATE)
        .collect();
    let seeds: BTreeSet<u64> = records.iter().map(|r| r.seed).collect();
    let common: BTreeSet<u64> = seeds
        .into_iter()
        .filter(|&seed| {
            groups
                .iter()
                .zip(&included)
                .filter(|(_, inc)| **inc)
                .all(|((_, g), _)| g.iter().any(|r| r.seed == seed && r.success))
        })
        .collect();

    groups
        .iter()
        .zip(included)
        .map(|((solver, g), inc)| {
            let successes = g.iter().filter(|r| r.success).count();
            let pool: Vec<&RunRecord> = if inc {
                g.iter()
                    .copied()
                    .filter(|r| r.success && common.contains(&r.seed))
                    .collect()
            } else {
                Vec::new()
            };
            let mean = |f: &dyn Fn(&RunRecord) -> f64| {
                (!pool.is_empty())
                    .then(|| pool.iter().map(|r| f(r)).sum::<f64>() / pool.len() as f64)
            };
            SummaryRow {
                scenario: g[0].scenario.clone(),
                solver: solver.to_string(),
                estimator: g[0].estimator.clone(),
                heuristic: g[0].heuristic.clone(),
                runs: g.len(),
                successes,
                success_rate: successes as f64 / g.len() as f64,
                included: inc,
                common_runs: pool.len(),
                mean_wall_time_s: mean(&|r| r.wall_time_s),
                mean_belief_transitions: mean(&|r| r.belief_transitions as f64),
                mean_validity_queries: mean(&|r| r.validity_queries as f64),
                mean_policy_cost: mean(&|r| r.policy_cost.unwrap_or(f64::NAN)),
            }
        })
        .collect()
}

#[derive(Serialize)]
struct Meta<'a> {
    tool: &'static str,
    version: &'static str,
    os: &'static str,
    arch: &'static str,
    workers: usize,
    runs: usize,
    seeds: &'a [u64],
    epsilon_residual: f64,
    inflation: f64,
    timeout_secs: f64,
    query_delay_us: u64,
    exact_eval_limit: usize,
    rollouts: usize,
    runs_columns: &'static [&'static str],
    summary_columns: &'static [&'static str],
    config: &'a ScenarioConfig,
}

/// Writes `runs.csv`, `summary.csv` and `meta.json` into `dir`.
pub fn write_outputs(
    dir: &Path,
    cfg: &ScenarioConfig,
    records: &[RunRecord],
    workers: usize,
) -> Result<(), BenchError> {
    std::fs::create_dir_all(dir)?;
    let mut w = csv::Writer::from_path(dir.join("runs.csv"))?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(dir.join("summary.csv"))?;
    for row in summarize(records) {
        w.serialize(row)?;
    }
    w.flush()?;

    let meta = Meta {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        os: std::env::consts::OS,
        arch: std::env::consts::ARCH,
        workers,
        runs: records.len(),
        seeds: &cfg.seeds,
        epsilon_residual: cfg.epsilon_residual,
        inflation: cfg.inflation,
        timeout_secs: cfg.timeout_secs,
        query_delay_us: cfg.query_delay_us,
        exact_eval_limit: super::EXACT_EVAL_LIMIT,
        rollouts: cfg.rollouts,
        runs_columns: RUNS_COLUMNS,
        summary_columns: SUMMARY_COLUMNS,
        config: cfg,
    };
    std::fs::write(
        dir.join("meta.json"),
        serde_json::to_string_pretty(&meta)? + "\n",
    )?;
    Ok(())
}
