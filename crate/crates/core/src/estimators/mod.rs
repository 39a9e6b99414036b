//! Cheap surrogates for the one-step lookahead value `Q_init(b, a)`.
//!
//! Every estimator reads the model through a [`BeliefEngine`] so its queries
//! are counted, but none of them touches the transition cache or the
//! belief-transition counter.

mod decomposed;
mod subsample;

pub use decomposed::{decomposed_terms, q_hat_unbiased_decomposed, DecomposedTerms};
pub use subsample::{
    entropy_corrected_value, pce_value, q_hat_entropy_corrected, q_hat_pce, q_hat_subsample,
    subsample, target_support, SubsampledBelief,
};

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::belief::{
    ActionId, BeliefEngine, BeliefError, BeliefHeuristic, BeliefKey, BeliefState, StateHeuristic,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimatorError {
    #[error(transparent)]
    Belief(#[from] BeliefError),

    #[error("estimator unsupported for this belief: {0}")]
    UnsupportedDomain(String),

    #[error("sample budget {0} is below the minimum of 3")]
    InsufficientBudget(usize),

    #[error("estimator config: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, EstimatorError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorKind {
    Exact,
    Subsample,
    SubsampleEntropyCorrected,
    SubsamplePce,
    Qmdp,
    UnbiasedDecomposed,
}

/// How the particles of a subsampled belief are weighted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Weighting {
    /// Empirical frequencies of all draws.
    #[default]
    Empirical,
    /// Equal weight on every distinct drawn state.
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorConfig {
    pub kind: EstimatorKind,
    /// Fraction of the support kept by subsampling.
    pub delta: f64,
    /// Scale of the `alpha * |H|` entropy heuristic.
    pub alpha: f64,
    /// Confidence coefficient of the conservative estimator.
    pub kappa: f64,
    pub weighting: Weighting,
    /// Total sample budget of the decomposed estimator; defaults to
    /// `3 * ceil(delta * n)`.
    pub budget: Option<usize>,
    pub seed: u64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            kind: EstimatorKind::Qmdp,
            delta: 0.15,
            alpha: 0.1,
            kappa: 1.22,
            weighting: Weighting::Empirical,
            budget: None,
            seed: 0,
        }
    }
}

impl EstimatorConfig {
    pub fn new(kind: EstimatorKind) -> Self {
        EstimatorConfig {
            kind,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return Err(EstimatorError::Config(format!(
                "delta {} not in (0, 1]",
                self.delta
            )));
        }
        if !(self.kappa >= 0.0) {
            return Err(EstimatorError::Config(format!(
                "kappa {} is negative",
                self.kappa
            )));
        }
        if !(self.alpha >= 0.0) {
            return Err(EstimatorError::Config(format!(
                "alpha {} is negative",
                self.alpha
            )));
        }
        if matches!(self.budget, Some(b) if b < 3) {
            return Err(EstimatorError::InsufficientBudget(self.budget.unwrap()));
        }
        Ok(())
    }

    /// Independent RNG stream for one `(belief, action)` estimate.
    pub fn stream(&self, key: &BeliefKey, action: ActionId) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(mix(mix(self.seed, key.digest()), action.0 as u64))
    }
}

/// SplitMix64 finalizer over the xor of both words.
fn mix(a: u64, b: u64) -> u64 {
    let mut z = a ^ b.rotate_left(32) ^ 0x9e37_79b9_7f4a_7c15;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A configured estimator together with the heuristics it needs.
#[derive(Clone)]
pub struct Estimator {
    config: EstimatorConfig,
    heuristic: Option<Arc<dyn BeliefHeuristic>>,
    state_heuristic: Option<Arc<dyn StateHeuristic>>,
}

impl std::fmt::Debug for Estimator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Estimator")
            .field("config", &self.config)
            .finish_non_exhaustive()
    }
}

impl Estimator {
    pub fn new(config: EstimatorConfig) -> Result<Self> {
        config.validate()?;
        Ok(Estimator {
            config,
            heuristic: None,
            state_heuristic: None,
        })
    }

    /// Belief heuristic used by the exact and plain subsampling estimators.
    pub fn with_heuristic(mut self, h: Arc<dyn BeliefHeuristic>) -> Self {
        self.heuristic = Some(h);
        self
    }

    /// State heuristic used by Q^MDP and the decomposed estimator.
    pub fn with_state_heuristic(mut self, h: Arc<dyn StateHeuristic>) -> Self {
        self.state_heuristic = Some(h);
        self
    }

    pub fn config(&self) -> &EstimatorConfig {
        &self.config
    }

    pub fn kind(&self) -> EstimatorKind {
        self.config.kind
    }

    fn need_heuristic(&self) -> Result<&dyn BeliefHeuristic> {
        self.heuristic
            .as_deref()
            .ok_or_else(|| EstimatorError::Config("belief heuristic not set".into()))
    }

    fn need_state_heuristic(&self) -> Result<&dyn StateHeuristic> {
        self.state_heuristic
            .as_deref()
            .ok_or_else(|| EstimatorError::Config("state heuristic not set".into()))
    }

    /// Estimate `Q_init(b, a)`; sampling estimators draw from the stream
    /// derived from `(seed, key, action)`.
    pub fn estimate(
        &self,
        engine: &BeliefEngine,
        b: &BeliefState,
        key: &BeliefKey,
        action: ActionId,
    ) -> Result<f64> {
        let cfg = &self.config;
        match cfg.kind {
            EstimatorKind::Exact => q_init_exact(engine, b, action, self.need_heuristic()?),
            EstimatorKind::Qmdp => q_hat_qmdp(engine, b, action, self.need_state_heuristic()?),
            EstimatorKind::Subsample => {
                let mut rng = cfg.stream(key, action);
                q_hat_subsample(engine, b, action, self.need_heuristic()?, cfg, &mut rng)
            }
            EstimatorKind::SubsampleEntropyCorrected => {
                let mut rng = cfg.stream(key, action);
                q_hat_entropy_corrected(engine, b, action, cfg, &mut rng)
            }
            EstimatorKind::SubsamplePce => {
                let mut rng = cfg.stream(key, action);
                q_hat_pce(engine, b, action, cfg, &mut rng)
            }
            EstimatorKind::UnbiasedDecomposed => {
                let mut rng = cfg.stream(key, action);
                q_hat_unbiased_decomposed(
                    engine,
                    b,
                    action,
                    self.need_state_heuristic()?,
                    cfg,
                    &mut rng,
                )
            }
        }
    }
}

/// `Q_init(b, a) = c(b, a) + sum_z P(z | b, a) heur(b_a^z)`.
///
/// Computes the full belief transition, so this is as expensive as an
/// evaluation; the heuristic is applied to every successor as given.
pub fn q_init_exact(
    engine: &BeliefEngine,
    b: &BeliefState,
    action: ActionId,
    heuristic: &dyn BeliefHeuristic,
) -> Result<f64> {
    let t = engine.transition_uncached(b, action)?;
    Ok(t.expected_cost
        + t.branches
            .iter()
            .map(|br| br.probability * heuristic.value(&br.successor))
            .sum::<f64>())
}

/// `sum_s b(s) (c(s, a) + sum_s' T(s, a, s') heur(s'))`.
///
/// Only transition queries are made.
pub fn q_hat_qmdp(
    engine: &BeliefEngine,
    b: &BeliefState,
    action: ActionId,
    heuristic: &dyn StateHeuristic,
) -> Result<f64> {
    let model = engine.model();
    let mut total = 0.0;
    for &(s, w) in b.particles() {
        let lookahead: f64 = engine
            .query_transition(b, s, action)?
            .into_iter()
            .map(|(next, p)| p * heuristic.state_value(next))
            .sum();
        total += w * (model.cost(b.observable(), s, action) + lookahead);
    }
    Ok(total)
}
