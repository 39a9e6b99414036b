//! RTDP-Bel, LAO*, their lazy variants, and full-horizon lazy validation.
//!
//! All four planners share one [`Planner`] core: a [`QTable`] keyed by
//! belief, the engine's transition cache, and a settle step that is either
//! eager (evaluate every action) or lazy (evaluate only the current argmin).

mod fh;
mod lao;
mod planner;
mod policy;
mod rtdp;
mod table;

pub use fh::{fh_lazy, FhConfig, InnerSolver, Restart};
pub use lao::{lao_star, lazy_lao_star};
pub use planner::{EvaluationRecord, ImproveOutcome, Planner, SolveStats};
pub use policy::{evaluate_policy, EvalMode, PolicyBranch, PolicyGraph, PolicyNode};
pub use rtdp::{lazy_rtdp_bel, rtdp_bel};
pub use table::{Node, QEntry, QSource, QTable};

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::belief::{BeliefError, QueryLedger};
use crate::estimators::EstimatorError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error(transparent)]
    Belief(#[from] BeliefError),

    #[error(transparent)]
    Estimator(#[from] EstimatorError),

    #[error("policy is not closed: {0}")]
    OpenPolicy(String),

    #[error("policy never terminates: {0}")]
    Divergence(String),

    #[error("no valid policy reaches the goal from the start belief")]
    NoValidPolicy,

    #[error("domain has no validity oracle")]
    NoValidityOracle,

    #[error("solver config: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, SolverError>;

/// When the expensive validity oracle is consulted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ValidationMode {
    /// Never; every applicable action is assumed valid.
    #[default]
    None,
    /// Before every evaluation; invalid actions become inapplicable.
    Eager,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Bellman residual below which values count as converged.
    pub epsilon_residual: f64,
    pub max_trials: usize,
    pub max_expansions: usize,
    pub timeout_secs: Option<f64>,
    /// Multiplies heuristic and estimator values at initialization.
    pub inflation: f64,
    pub seed: u64,
    /// RTDP convergence is checked every `window` trials.
    pub window: usize,
    /// Trial step cap; `None` means ten times the state count.
    pub max_trial_length: Option<usize>,
    /// Sweep cap for a single ImproveValues call.
    pub max_sweeps: usize,
    pub validation: ValidationMode,
    /// Keep a log of every evaluation with the Q-values seen at that moment.
    pub record_evaluations: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            epsilon_residual: 1e-9,
            max_trials: 200_000,
            max_expansions: 1_000_000,
            timeout_secs: Some(300.0),
            inflation: 1.0,
            seed: 0,
            window: 10,
            max_trial_length: None,
            max_sweeps: 100_000,
            validation: ValidationMode::None,
            record_evaluations: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon_residual > 0.0) {
            return Err(SolverError::Config(
                "epsilon_residual must be positive".into(),
            ));
        }
        if !(self.inflation >= 1.0) {
            return Err(SolverError::Config("inflation must be at least 1".into()));
        }
        if self.window == 0 {
            return Err(SolverError::Config("window must be at least 1".into()));
        }
        if matches!(self.timeout_secs, Some(t) if !(t > 0.0)) {
            return Err(SolverError::Config("timeout must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SolverResult {
    /// `V(b0)` at termination.
    pub value: f64,
    pub policy: Option<PolicyGraph>,
    /// Why the policy could not be extracted, if it could not.
    pub policy_error: Option<String>,
    pub ledger: QueryLedger,
    pub stats: SolveStats,
    pub wall_time: Duration,
    pub converged: bool,
}
