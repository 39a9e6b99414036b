//! Acceptance suites run by `lazybench verify <suite>`.

use std::sync::Arc;
use std::time::Instant;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::belief::{
    ActionId, BeliefEngine, BeliefState, ExpectedStateHeuristic, GoalPomdp, HypothesisCount,
    StateHeuristic, StateId,
};
use crate::domains::{
    contact_toy_model, corridor, fixtures, line_world, planted_partition, DistTable,
};
use crate::estimators::{q_hat_qmdp, q_init_exact, Estimator, EstimatorConfig, EstimatorKind};
use crate::oracle::{solve_exhaustive, OracleConfig};
use crate::solvers::{
    evaluate_policy, fh_lazy, lao_star, lazy_lao_star, lazy_rtdp_bel, rtdp_bel, EvalMode, FhConfig,
    SolverConfig, SolverResult, ValidationMode,
};

pub const SUITES: &[&str] = &[
    "oracle-equivalence",
    "laziness-counters",
    "estimator-stats",
    "fh-correctness",
];

const VALUE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Check {
            name: name.into(),
            passed,
            detail,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub passed: bool,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    fn new(suite: &str, checks: Vec<Check>) -> Self {
        SuiteReport {
            suite: suite.into(),
            passed: checks.iter().all(|c| c.passed),
            checks,
        }
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Runs a suite by id; `None` for an unknown id.
pub fn run_suite(id: &str) -> Option<SuiteReport> {
    Some(match id {
        "oracle-equivalence" => oracle_equivalence(),
        "laziness-counters" => laziness_counters(),
        "estimator-stats" => estimator_stats(),
        "fh-correctness" => fh_correctness(),
        _ => return None,
    })
}

/// The four planners with `E Dist` and Q^MDP, in the order
/// RTDP-Bel, Lazy RTDP-Bel, LAO*, Lazy LAO*.
pub fn solve_four(
    model: &dyn GoalPomdp,
    dist: Arc<DistTable>,
    config: &SolverConfig,
) -> Vec<(&'static str, SolverResult)> {
    let h = ExpectedStateHeuristic(dist.clone());
    let est = Estimator::new(EstimatorConfig::new(EstimatorKind::Qmdp))
        .expect("default estimator config is valid")
        .with_state_heuristic(dist);
    let mut out = Vec::with_capacity(4);
    for name in ["rtdp-bel", "lazy-rtdp-bel", "lao-star", "lazy-lao-star"] {
        let engine = BeliefEngine::new(model);
        let r = match name {
            "rtdp-bel" => rtdp_bel(&engine, &h, config),
            "lazy-rtdp-bel" => lazy_rtdp_bel(&engine, &h, &est, config),
            "lao-star" => lao_star(&engine, &h, config),
            _ => lazy_lao_star(&engine, &h, &est, config),
        };
        match r {
            Ok(r) => out.push((name, r)),
            Err(e) => panic!("{name} failed: {e}"),
        }
    }
    out
}

fn policy_cost(r: &SolverResult, model: &dyn GoalPomdp) -> Option<f64> {
    r.policy
        .as_ref()
        .and_then(|p| evaluate_policy(p, model, EvalMode::Exact).ok())
}

/// Largest amount by which Q^MDP built on `heuristic` exceeds the optimal
/// Q-value, over every reachable belief and available action.
pub fn qmdp_overshoot(model: &dyn GoalPomdp, heuristic: &dyn StateHeuristic) -> f64 {
    let sol = solve_exhaustive(model, &OracleConfig::default()).expect("fixture is enumerable");
    let engine = BeliefEngine::new(model);
    let mut worst = f64::NEG_INFINITY;
    for (b, _) in sol.beliefs() {
        for a in (0..model.num_actions()).map(ActionId) {
            let Some(q) = sol.q_value(&b, a) else {
                continue;
            };
            let est = q_hat_qmdp(&engine, &b, a, heuristic).expect("action is applicable");
            worst = worst.max(est - q);
        }
    }
    worst
}

fn small_fixtures() -> Vec<(&'static str, Box<dyn GoalPomdp>, Arc<DistTable>)> {
    let lw = line_world();
    let slip = fixtures::indoor_slip_small();
    let start = fixtures::indoor_start_small();
    vec![
        ("line-world", Box::new(lw.clone()), lw.dist_table()),
        (
            "indoor-slip-5x5",
            Box::new(slip.clone()),
            slip.dist_table().unwrap(),
        ),
        (
            "indoor-start-5x5",
            Box::new(start.clone()),
            start.dist_table().unwrap(),
        ),
    ]
}

fn oracle_equivalence() -> SuiteReport {
    let clock = Instant::now();
    let config = SolverConfig::default();
    let mut values = Vec::new();
    let mut costs = Vec::new();
    let mut admissible = Vec::new();
    let (mut values_ok, mut costs_ok, mut adm_ok) = (true, true, true);
    for (name, model, dist) in small_fixtures() {
        let oracle = solve_exhaustive(&*model, &OracleConfig::default())
            .expect("fixture is enumerable")
            .root_value();
        let runs = solve_four(&*model, dist.clone(), &config);
        for (solver, r) in &runs {
            let ok = r.converged && (r.value - oracle).abs() <= VALUE_TOL;
            values_ok &= ok;
            values.push(format!(
                "{name}/{solver} V={:.9} oracle={oracle:.9}{}",
                r.value,
                if ok { "" } else { " MISMATCH" }
            ));
        }
        let cost = |i: usize| policy_cost(&runs[i].1, &*model);
        for (vanilla, lazy) in [(0, 1), (2, 3)] {
            let (cv, cl) = (cost(vanilla), cost(lazy));
            let ok = matches!((cv, cl), (Some(a), Some(b)) if (a - b).abs() <= VALUE_TOL);
            costs_ok &= ok;
            costs.push(format!("{name}/{}: {cv:?} vs {cl:?}", runs[lazy].0));
        }
        let over = qmdp_overshoot(&*model, &*dist);
        adm_ok &= over <= VALUE_TOL;
        admissible.push(format!("{name}: max(Q_mdp - Q*) = {over:.3e}"));
    }
    let secs = clock.elapsed().as_secs_f64();
    SuiteReport::new(
        "oracle-equivalence",
        vec![
            Check::new("values-match-oracle", values_ok, values.join("; ")),
            Check::new("runtime-under-60s", secs < 60.0, format!("{secs:.2}s")),
            Check::new("lazy-cost-equality", costs_ok, costs.join("; ")),
            Check::new("qmdp-admissible", adm_ok, admissible.join("; ")),
        ],
    )
}

/// Seeds of the 15×15 laziness benchmark.
pub const LARGE_SEEDS: std::ops::Range<u64> = 0..20;

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    }
}

fn laziness_counters() -> SuiteReport {
    let mut dominance = true;
    let mut costs_ok = true;
    let mut ratios = [Vec::new(), Vec::new()];
    let mut detail = Vec::new();
    for seed in LARGE_SEEDS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = fixtures::indoor_slip_large(&mut rng);
        let config = SolverConfig {
            seed,
            ..SolverConfig::default()
        };
        let runs = solve_four(&model, model.dist_table().unwrap(), &config);
        let bt: Vec<u64> = runs
            .iter()
            .map(|(_, r)| r.ledger.belief_transitions_computed)
            .collect();
        for (i, (vanilla, lazy)) in [(0, 1), (2, 3)].into_iter().enumerate() {
            dominance &= bt[lazy] <= bt[vanilla];
            ratios[i].push(bt[vanilla] as f64 / bt[lazy] as f64);
            let (cv, cl) = (
                policy_cost(&runs[vanilla].1, &model),
                policy_cost(&runs[lazy].1, &model),
            );
            costs_ok &= runs.iter().all(|(_, r)| r.converged)
                && matches!((cv, cl), (Some(a), Some(b)) if (a - b).abs() <= VALUE_TOL);
        }
        detail.push(format!("seed {seed}: {bt:?}"));
    }
    let [rtdp, lao] = ratios.map(median);

    // A single action leaves nothing to defer: counts must tie.
    let single = corridor(4);
    let runs = solve_four(&single, single.dist_table(), &SolverConfig::default());
    let bt: Vec<u64> = runs
        .iter()
        .map(|(_, r)| r.ledger.belief_transitions_computed)
        .collect();
    let tie = bt[1] <= bt[0] && bt[3] <= bt[2];

    SuiteReport::new(
        "laziness-counters",
        vec![
            Check::new("per-seed-dominance", dominance, detail.join("; ")),
            Check::new(
                "median-ratio-at-least-2",
                rtdp >= 2.0 && lao >= 2.0,
                format!("rtdp {rtdp:.3}, lao {lao:.3}"),
            ),
            Check::new(
                "lazy-cost-equality",
                costs_ok,
                "vanilla vs lazy exact policy cost".into(),
            ),
            Check::new("single-action-equality", tie, format!("{bt:?}")),
        ],
    )
}

/// Draws used by the estimator statistics checks.
pub const ESTIMATOR_DRAWS: u64 = 10_000;

/// Mean and standard error of the entropy-corrected estimate of the
/// planted-partition split, next to the exact lookahead.
pub fn entropy_corrected_stats(draws: u64) -> (f64, f64, f64) {
    let model = contact_toy_model(planted_partition()).expect("fixture is valid");
    let engine = BeliefEngine::new(&model);
    let b = model.initial_belief();
    let key = b.key();
    let action = ActionId(0);
    let base = EstimatorConfig::new(EstimatorKind::SubsampleEntropyCorrected);
    let exact = q_init_exact(&engine, &b, action, &HypothesisCount { alpha: base.alpha })
        .expect("sweep is applicable");
    let samples: Vec<f64> = (0..draws)
        .map(|seed| {
            let est = Estimator::new(EstimatorConfig {
                seed,
                ..base.clone()
            })
            .expect("valid config");
            est.estimate(&engine, &b, &key, action)
                .expect("unweighted belief")
        })
        .collect();
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt(), exact)
}

/// Fraction of random `(b, a)` draws on which the PCE estimate does not
/// exceed the exact lookahead. Beliefs are uniform over a random subset of
/// 10 to 100 of the hypotheses.
pub fn pce_coverage(draws: u64, kappa: f64) -> f64 {
    let model = contact_toy_model(planted_partition()).expect("fixture is valid");
    let engine = BeliefEngine::new(&model);
    let b0 = model.initial_belief();
    let n = b0.support_size();
    let base = EstimatorConfig {
        kappa,
        ..EstimatorConfig::new(EstimatorKind::SubsamplePce)
    };
    let heur = HypothesisCount { alpha: base.alpha };
    let mut covered = 0u64;
    for seed in 0..draws {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let size = rng.random_range(10..=n);
        let states = sample(&mut rng, n, size)
            .into_iter()
            .map(|i| StateId(i as u32));
        let b = BeliefState::uniform(states)
            .expect("non-empty subset")
            .with_observable(b0.observable());
        let actions: Vec<ActionId> = (0..model.num_actions())
            .map(ActionId)
            .filter(|&a| engine.is_applicable(&b, a))
            .collect();
        let a = actions[rng.random_range(0..actions.len())];
        let est = Estimator::new(EstimatorConfig {
            seed,
            ..base.clone()
        })
        .expect("valid config");
        let q_hat = est
            .estimate(&engine, &b, &b.key(), a)
            .expect("unweighted belief");
        let q = q_init_exact(&engine, &b, a, &heur).expect("applicable");
        if q_hat <= q + 1e-12 {
            covered += 1;
        }
    }
    covered as f64 / draws as f64
}

fn estimator_stats() -> SuiteReport {
    let clock = Instant::now();
    let (mean, se, exact) = entropy_corrected_stats(ESTIMATOR_DRAWS);
    let secs = clock.elapsed().as_secs_f64();
    let within = (mean - exact).abs() <= 2.0 * se;

    let coverage = pce_coverage(ESTIMATOR_DRAWS, 1.22);
    let floor = 0.95 - 3.0 * (0.95 * 0.05 / ESTIMATOR_DRAWS as f64).sqrt();
    SuiteReport::new(
        "estimator-stats",
        vec![
            Check::new(
                "entropy-corrected-within-2se",
                within,
                format!(
                    "mean {mean:.5}, exact {exact:.5}, se {se:.5}, gap {:.2} se",
                    (mean - exact) / se
                ),
            ),
            Check::new(
                "entropy-corrected-runtime-under-30s",
                secs < 30.0,
                format!("{secs:.2}s"),
            ),
            Check::new(
                "pce-conservative",
                coverage >= floor,
                format!("coverage {coverage:.4}, floor {floor:.4}"),
            ),
        ],
    )
}

fn fh_correctness() -> SuiteReport {
    let model = fixtures::outdoor_hazards();
    let dist = model.dist_table().unwrap();
    let h = ExpectedStateHeuristic(dist.clone());
    let est = Estimator::new(EstimatorConfig::new(EstimatorKind::Qmdp))
        .expect("valid config")
        .with_state_heuristic(dist);
    let config = SolverConfig::default();

    let engine = BeliefEngine::new(&model);
    let fh = fh_lazy(&engine, &h, Some(&est), &config, &FhConfig::default());
    let eager_config = SolverConfig {
        validation: ValidationMode::Eager,
        ..config.clone()
    };
    let engine = BeliefEngine::new(&model);
    let eager = lazy_lao_star(&engine, &h, &est, &eager_config);
    let (fh, eager) = match (fh, eager) {
        (Ok(a), Ok(b)) => (a, b),
        (a, b) => {
            let msg = format!("fh: {:?}, eager: {:?}", a.err(), b.err());
            return SuiteReport::new(
                "fh-correctness",
                vec![Check::new("solvers-finish", false, msg)],
            );
        }
    };

    let invalid = fh.policy.as_ref().map(|p| {
        p.nodes
            .values()
            .flat_map(|n| n.belief.states().map(move |s| (n, s)))
            .filter(|(n, s)| !model.is_valid(n.belief.observable(), *s, n.action))
            .count()
    });
    let (cf, ce) = (policy_cost(&fh, &model), policy_cost(&eager, &model));
    let ratio = fh.ledger.validity_queries as f64 / eager.ledger.validity_queries as f64;
    SuiteReport::new(
        "fh-correctness",
        vec![
            Check::new(
                "policy-fully-valid",
                fh.converged && invalid == Some(0),
                format!(
                    "invalid (belief, state) pairs: {invalid:?}, rounds {}",
                    fh.stats.replans
                ),
            ),
            Check::new(
                "cost-matches-eager",
                matches!((cf, ce), (Some(a), Some(b)) if (a - b).abs() <= VALUE_TOL),
                format!("fh {cf:?}, eager {ce:?}"),
            ),
            Check::new(
                "validity-queries-at-most-half",
                ratio <= 0.5,
                format!(
                    "fh {} / eager {} = {ratio:.3}",
                    fh.ledger.validity_queries, eager.ledger.validity_queries
                ),
            ),
        ],
    )
}
