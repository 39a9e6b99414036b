use std::collections::BTreeMap;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use super::{q_init_exact, EstimatorConfig, EstimatorError, Result, Weighting};
use crate::belief::{ActionId, BeliefEngine, BeliefHeuristic, BeliefKey, BeliefState};

/// Draw cap per requested distinct state.
const DRAWS_PER_TARGET: usize = 50;

/// A reduced-support belief drawn from `base`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsampledBelief {
    pub base: BeliefKey,
    pub belief: BeliefState,
    /// Support size of the original belief.
    pub n: usize,
    /// Support size of the subsample.
    pub k: usize,
    pub draws: usize,
}

/// `min(n, ceil(delta * n))`, at least one.
pub fn target_support(n: usize, delta: f64) -> usize {
    // The small offset keeps 0.15 * 100 from rounding up to 16.
    let k = (delta * n as f64 - 1e-9).ceil() as usize;
    k.clamp(1, n)
}

/// Draws i.i.d. states from `b` until `ceil(delta * n)` distinct states have
/// been seen. After `50 * target` draws the sample is padded with the most
/// probable unseen states.
pub fn subsample<R: Rng + ?Sized>(
    b: &BeliefState,
    delta: f64,
    weighting: Weighting,
    rng: &mut R,
) -> SubsampledBelief {
    let particles = b.particles();
    let n = particles.len();
    let target = target_support(n, delta);
    let mut counts: BTreeMap<usize, u64> = BTreeMap::new();
    let mut draws = 0;
    if target == n && n == 1 {
        counts.insert(0, 1);
        draws = 1;
    } else {
        let dist = WeightedIndex::new(particles.iter().map(|(_, p)| *p))
            .expect("canonical beliefs have positive weights");
        while counts.len() < target && draws < DRAWS_PER_TARGET * target {
            *counts.entry(dist.sample(rng)).or_default() += 1;
            draws += 1;
        }
        if counts.len() < target {
            let mut unseen: Vec<usize> = (0..n).filter(|i| !counts.contains_key(i)).collect();
            unseen.sort_by(|a, b| particles[*b].1.total_cmp(&particles[*a].1).then(a.cmp(b)));
            for i in unseen.into_iter().take(target - counts.len()) {
                counts.insert(i, 1);
            }
        }
    }
    let raw = counts.iter().map(|(&i, &c)| {
        let w = match weighting {
            Weighting::Empirical => c as f64,
            Weighting::Uniform => 1.0,
        };
        (particles[i].0, w)
    });
    let belief = BeliefState::canonicalize_with(b.observable(), raw)
        .expect("subsample has positive weights");
    SubsampledBelief {
        base: b.key(),
        k: belief.support_size(),
        belief,
        n,
        draws,
    }
}

/// `Q_init(b_hat, a)`: the exact lookahead on a subsample of `b`.
pub fn q_hat_subsample<R: Rng + ?Sized>(
    engine: &BeliefEngine,
    b: &BeliefState,
    action: ActionId,
    heuristic: &dyn BeliefHeuristic,
    cfg: &EstimatorConfig,
    rng: &mut R,
) -> Result<f64> {
    let sub = subsample(b, cfg.delta, cfg.weighting, rng);
    q_init_exact(engine, &sub.belief, action, heuristic)
}

/// `c + alpha * (n / k)^2 * sum_z |H_z|^2 / n`.
pub fn entropy_corrected_value(cost: f64, alpha: f64, n: usize, k: usize, counts: &[usize]) -> f64 {
    let ratio = n as f64 / k as f64;
    let sum: f64 = counts.iter().map(|&c| (c * c) as f64).sum();
    cost + alpha * ratio * ratio * sum / n as f64
}

/// `c + alpha * sum_z (max(|H_z| - kappa sqrt(k), 0) * n / k)^2 / n`.
pub fn pce_value(cost: f64, alpha: f64, kappa: f64, n: usize, k: usize, counts: &[usize]) -> f64 {
    let shrink = kappa * (k as f64).sqrt();
    let ratio = n as f64 / k as f64;
    let sum: f64 = counts
        .iter()
        .map(|&c| {
            let scaled = (c as f64 - shrink).max(0.0) * ratio;
            scaled * scaled
        })
        .sum();
    cost + alpha * sum / n as f64
}

/// Subsamples `b`, evaluates `action` on the subsample and returns
/// `(c(b_hat, a), n, k, |H_hat^z| per branch)`.
fn partition_counts<R: Rng + ?Sized>(
    engine: &BeliefEngine,
    b: &BeliefState,
    action: ActionId,
    cfg: &EstimatorConfig,
    rng: &mut R,
) -> Result<(f64, usize, usize, Vec<usize>)> {
    if !b.is_unweighted() {
        return Err(EstimatorError::UnsupportedDomain(
            "entropy-corrected estimators need an unweighted hypothesis belief".into(),
        ));
    }
    let sub = subsample(b, cfg.delta, cfg.weighting, rng);
    let t = engine.transition_uncached(&sub.belief, action)?;
    let counts: Vec<usize> = t
        .branches
        .iter()
        .map(|br| br.successor.support_size())
        .collect();
    if counts.iter().sum::<usize>() != sub.k {
        return Err(EstimatorError::UnsupportedDomain(
            "hypotheses must map one-to-one under the action".into(),
        ));
    }
    Ok((t.expected_cost, sub.n, sub.k, counts))
}

/// Subsampled estimate of `Q_init` under `heur(b) = alpha |H|`, rescaling each
/// branch's hypothesis count by `n / k` before squaring.
pub fn q_hat_entropy_corrected<R: Rng + ?Sized>(
    engine: &BeliefEngine,
    b: &BeliefState,
    action: ActionId,
    cfg: &EstimatorConfig,
    rng: &mut R,
) -> Result<f64> {
    let (cost, n, k, counts) = partition_counts(engine, b, action, cfg, rng)?;
    Ok(entropy_corrected_value(cost, cfg.alpha, n, k, &counts))
}

/// Entropy-corrected estimate with every branch count shrunk by
/// `kappa * sqrt(k)` (floored at zero) before rescaling.
pub fn q_hat_pce<R: Rng + ?Sized>(
    engine: &BeliefEngine,
    b: &BeliefState,
    action: ActionId,
    cfg: &EstimatorConfig,
    rng: &mut R,
) -> Result<f64> {
    let (cost, n, k, counts) = partition_counts(engine, b, action, cfg, rng)?;
    Ok(pce_value(cost, cfg.alpha, cfg.kappa, n, k, &counts))
}
