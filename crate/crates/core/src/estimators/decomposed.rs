use std::collections::{BTreeMap, HashMap};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use super::subsample::target_support;
use super::{EstimatorConfig, EstimatorError, Result};
use crate::belief::{ActionId, BeliefEngine, BeliefState, ObservationId, StateHeuristic, StateId};

/// Per-state quantities: cost, `P(z | s, a)` and `sum_s' T O heur(s')` per `z`.
struct StateTerms {
    cost: f64,
    pz: BTreeMap<ObservationId, f64>,
    nz: BTreeMap<ObservationId, f64>,
}

/// The independently estimated pieces of the decomposed estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct DecomposedTerms {
    pub cost: f64,
    /// `P(z | b, a)` from the first pool.
    pub p_hat: BTreeMap<ObservationId, f64>,
    /// `sum_s b(s) sum_s' T O heur(s')` per branch, from the second pool.
    pub n_hat: BTreeMap<ObservationId, f64>,
    /// `P(z | b, a)` again, from the third pool.
    pub d_hat: BTreeMap<ObservationId, f64>,
}

impl DecomposedTerms {
    /// `c_hat + sum_z P_hat(z) N_hat(z) / D_hat(z)`, dropping branches with
    /// `D_hat(z) = 0`.
    pub fn value(&self) -> f64 {
        let mut q = self.cost;
        for (z, p) in &self.p_hat {
            let d = self.d_hat.get(z).copied().unwrap_or(0.0);
            if *p > 0.0 && d > 0.0 {
                q += p * self.n_hat.get(z).copied().unwrap_or(0.0) / d;
            }
        }
        q
    }
}

/// Three-pool estimate for heuristics of the form `heur(b) = E_{s~b} heur(s)`.
/// See [`decomposed_terms`].
pub fn q_hat_unbiased_decomposed<R: Rng + ?Sized>(
    engine: &BeliefEngine,
    b: &BeliefState,
    action: ActionId,
    heuristic: &dyn StateHeuristic,
    cfg: &EstimatorConfig,
    rng: &mut R,
) -> Result<f64> {
    Ok(decomposed_terms(engine, b, action, heuristic, cfg, rng)?.value())
}

/// Draws the three pools and accumulates their terms. `P_hat` and the cost
/// come from the first pool, the numerator from the second and the
/// denominator from the third; each pool gets a third of the budget. When a
/// third of the budget covers the support, every pool is the exact belief.
pub fn decomposed_terms<R: Rng + ?Sized>(
    engine: &BeliefEngine,
    b: &BeliefState,
    action: ActionId,
    heuristic: &dyn StateHeuristic,
    cfg: &EstimatorConfig,
    rng: &mut R,
) -> Result<DecomposedTerms> {
    let n = b.support_size();
    let budget = cfg.budget.unwrap_or(3 * target_support(n, cfg.delta));
    if budget < 3 {
        return Err(EstimatorError::InsufficientBudget(budget));
    }
    let m = budget / 3;
    let pools: [Vec<(StateId, f64)>; 3] = if m >= n {
        std::array::from_fn(|_| b.particles().to_vec())
    } else {
        let dist = WeightedIndex::new(b.particles().iter().map(|(_, p)| *p))
            .expect("canonical beliefs have positive weights");
        std::array::from_fn(|_| {
            let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
            for _ in 0..m {
                *counts.entry(dist.sample(rng)).or_default() += 1;
            }
            counts
                .into_iter()
                .map(|(i, c)| (b.particles()[i].0, c as f64 / m as f64))
                .collect()
        })
    };

    let model = engine.model();
    let mut terms: HashMap<StateId, StateTerms> = HashMap::new();
    for &(s, _) in pools.iter().flatten() {
        if terms.contains_key(&s) {
            continue;
        }
        let mut t = StateTerms {
            cost: model.cost(b.observable(), s, action),
            pz: BTreeMap::new(),
            nz: BTreeMap::new(),
        };
        for (next, p) in engine.query_transition(b, s, action)? {
            let h = heuristic.state_value(next);
            for (z, q) in engine.query_observation(b, next, action)? {
                *t.pz.entry(z).or_default() += p * q;
                *t.nz.entry(z).or_default() += p * q * h;
            }
        }
        terms.insert(s, t);
    }

    let accumulate = |pool: &[(StateId, f64)],
                      pick: fn(&StateTerms) -> &BTreeMap<ObservationId, f64>| {
        let mut acc: BTreeMap<ObservationId, f64> = BTreeMap::new();
        for (s, w) in pool {
            for (z, v) in pick(&terms[s]) {
                *acc.entry(*z).or_default() += w * v;
            }
        }
        acc
    };
    Ok(DecomposedTerms {
        cost: pools[0].iter().map(|(s, w)| w * terms[s].cost).sum(),
        p_hat: accumulate(&pools[0], |t| &t.pz),
        n_hat: accumulate(&pools[1], |t| &t.nz),
        d_hat: accumulate(&pools[2], |t| &t.pz),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::belief::{ExpectedStateHeuristic, GoalPomdp};
    use crate::domains::line_world::{line_world, RIGHT};
    use crate::estimators::q_init_exact;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn exhaustive_budget_matches_exact() {
        let w = line_world();
        let engine = BeliefEngine::new(&w);
        let b = w.initial_belief();
        let cfg = EstimatorConfig {
            budget: Some(9),
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let dist = w.dist_table();
        let q = q_hat_unbiased_decomposed(&engine, &b, RIGHT, &*dist, &cfg, &mut rng).unwrap();
        let exact = q_init_exact(&engine, &b, RIGHT, &ExpectedStateHeuristic(dist)).unwrap();
        assert!((q - exact).abs() < 1e-9);
    }

    #[test]
    fn budget_below_three_is_rejected() {
        let w = line_world();
        let engine = BeliefEngine::new(&w);
        let cfg = EstimatorConfig {
            budget: Some(2),
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let err = q_hat_unbiased_decomposed(
            &engine,
            &w.initial_belief(),
            RIGHT,
            &*w.dist_table(),
            &cfg,
            &mut rng,
        )
        .unwrap_err();
        assert_eq!(err, EstimatorError::InsufficientBudget(2));
    }
}
