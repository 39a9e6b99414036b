use serde::{Deserialize, Serialize};

use super::planner::Planner;
use super::{lao, rtdp, Result, SolverConfig, SolverError, SolverResult, ValidationMode};
use crate::belief::{BeliefEngine, BeliefHeuristic};
use crate::estimators::Estimator;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InnerSolver {
    RtdpBel,
    LazyRtdpBel,
    LaoStar,
    LazyLaoStar,
}

impl InnerSolver {
    pub fn is_lazy(self) -> bool {
        matches!(self, InnerSolver::LazyRtdpBel | InnerSolver::LazyLaoStar)
    }
}

/// What survives between replanning rounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Restart {
    /// Keep the Q-table; only blacklisted entries are dropped.
    #[default]
    Warm,
    /// Start every round from an empty Q-table and transition cache.
    Cold,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FhConfig {
    pub inner: InnerSolver,
    pub restart: Restart,
    pub max_rounds: usize,
}

impl Default for FhConfig {
    fn default() -> Self {
        FhConfig {
            inner: InnerSolver::LazyLaoStar,
            restart: Restart::Warm,
            max_rounds: 1_000,
        }
    }
}

/// Full-horizon lazy validation: plan as if every action were valid,
/// validate only the actions of the returned policy, blacklist the invalid
/// ones and replan until the policy validates.
pub fn fh_lazy(
    engine: &BeliefEngine,
    heuristic: &dyn BeliefHeuristic,
    estimator: Option<&Estimator>,
    config: &SolverConfig,
    fh: &FhConfig,
) -> Result<SolverResult> {
    if !engine.model().has_validity_oracle() {
        return Err(SolverError::NoValidityOracle);
    }
    let estimator = match (fh.inner.is_lazy(), estimator) {
        (true, None) => {
            return Err(SolverError::Config(
                "lazy inner solver needs an estimator".into(),
            ))
        }
        (true, e) => e,
        (false, _) => None,
    };
    let mut inner_config = config.clone();
    inner_config.validation = ValidationMode::None;
    let mut p = Planner::new(engine, heuristic, estimator, inner_config)?;
    if engine.is_goal_belief(&p.root) {
        return Ok(p.finish(true));
    }

    for _ in 0..fh.max_rounds {
        p.stats.replans += 1;
        let converged = match fh.inner {
            InnerSolver::RtdpBel | InnerSolver::LazyRtdpBel => rtdp::run(&mut p)?,
            InnerSolver::LaoStar | InnerSolver::LazyLaoStar => lao::run(&mut p)?,
        };
        p.require_finite_root()?;
        if !converged {
            return Ok(p.finish(false));
        }
        let policy = p.extract_policy()?;
        let invalid: Vec<_> = policy
            .nodes
            .iter()
            .filter(|&(key, node)| !p.check_valid(key, &node.belief, node.action))
            .map(|(key, node)| (key.clone(), node.action))
            .collect();
        if invalid.is_empty() {
            return Ok(p.finish(true));
        }
        for (key, action) in &invalid {
            p.blacklist(key, *action);
        }
        if fh.restart == Restart::Cold {
            p.reset();
        }
    }
    Ok(p.finish(false))
}
