//! Acceptance criteria, one PASS/FAIL line each. Failures are reported, not
//! turned into a non-zero exit; `lazybench verify <suite>` gives the exit code.

mod common;

use std::path::{Path, PathBuf};

use lazy_pomdp::bench::verify::{self, SuiteReport};
use lazy_pomdp::bench::{run_matrix, write_outputs, ScenarioConfig};

const INVARIANT_OPS: usize = 100_000;
const RAYCAST_FIXTURES: usize = 100;

type Criterion<'a> = (&'static str, Box<dyn FnOnce() -> Outcome + 'a>);

struct Outcome {
    passed: bool,
    detail: String,
}

fn from_checks(report: &SuiteReport, names: &[&str]) -> Outcome {
    let checks: Vec<_> = names
        .iter()
        .map(|n| {
            report
                .check(n)
                .unwrap_or_else(|| panic!("{} has no check {n}", report.suite))
        })
        .collect();
    Outcome {
        passed: checks.iter().all(|c| c.passed),
        detail: checks
            .iter()
            .map(|c| {
                format!(
                    "{} [{}] {}",
                    c.name,
                    if c.passed { "ok" } else { "failed" },
                    c.detail
                )
            })
            .collect::<Vec<_>>()
            .join(" | "),
    }
}

fn belief_core() -> Outcome {
    let sweep = common::belief_invariant_sweep(INVARIANT_OPS, 0);
    let rays = common::raycast_vs_brute_force(RAYCAST_FIXTURES, 0);
    let detail = format!(
        "invariants: {} | raycast: {}",
        sweep
            .as_ref()
            .map_or_else(|e| e.clone(), |n| format!("{n} ops")),
        rays.as_ref().map_or_else(
            |e| e.clone(),
            |n| format!("{n} rays on {RAYCAST_FIXTURES} maps")
        ),
    );
    Outcome {
        passed: sweep.is_ok() && rays.is_ok(),
        detail,
    }
}

fn config_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/acceptance")
}

/// `runs.csv` with the wall-time column blanked.
fn runs_csv(cfg: &ScenarioConfig, workers: usize, dir: &Path) -> Result<Vec<u8>, String> {
    let records = run_matrix(cfg, workers).map_err(|e| e.to_string())?;
    write_outputs(dir, cfg, &records, workers).map_err(|e| e.to_string())?;
    let mut reader = csv::Reader::from_path(dir.join("runs.csv")).map_err(|e| e.to_string())?;
    let headers = reader.headers().map_err(|e| e.to_string())?.clone();
    let wall = headers
        .iter()
        .position(|h| h == "wall_time_s")
        .ok_or("no wall_time_s column")?;
    let mut out = csv::Writer::from_writer(Vec::new());
    out.write_record(&headers).map_err(|e| e.to_string())?;
    for row in reader.records() {
        let row = row.map_err(|e| e.to_string())?;
        let fields = row
            .iter()
            .enumerate()
            .map(|(i, f)| if i == wall { "" } else { f });
        out.write_record(fields).map_err(|e| e.to_string())?;
    }
    out.into_inner().map_err(|e| e.to_string())
}

fn determinism() -> Outcome {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(config_dir())
        .expect("config directory")
        .map(|e| e.expect("directory entry").path())
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .collect();
    paths.sort();
    let tmp = tempfile::tempdir().expect("temp dir");
    let mut passed = true;
    let mut detail = Vec::new();
    for path in &paths {
        let name = path.file_stem().unwrap().to_string_lossy().into_owned();
        let result = ScenarioConfig::load(path)
            .map_err(|e| e.to_string())
            .and_then(|cfg| {
                let a = runs_csv(&cfg, 1, &tmp.path().join(format!("{name}-a")))?;
                let b = runs_csv(&cfg, 4, &tmp.path().join(format!("{name}-b")))?;
                Ok(a == b)
            });
        match result {
            Ok(same) => {
                passed &= same;
                detail.push(format!(
                    "{name} {}",
                    if same { "identical" } else { "differs" }
                ));
            }
            Err(e) => {
                passed = false;
                detail.push(format!("{name} error: {e}"));
            }
        }
    }
    Outcome {
        passed,
        detail: format!(
            "{} configs, 1 vs 4 workers: {}",
            paths.len(),
            detail.join(", ")
        ),
    }
}

fn main() {
    let suite = |id: &str| verify::run_suite(id).expect("known suite");
    let oracle = suite("oracle-equivalence");
    let laziness = suite("laziness-counters");
    let estimators = suite("estimator-stats");
    let fh = suite("fh-correctness");

    let criteria: Vec<Criterion> = vec![
        (
            "oracle equivalence",
            Box::new(|| from_checks(&oracle, &["values-match-oracle", "runtime-under-60s"])),
        ),
        (
            "laziness counter dominance",
            Box::new(|| {
                from_checks(
                    &laziness,
                    &["per-seed-dominance", "median-ratio-at-least-2"],
                )
            }),
        ),
        (
            "conservative-estimator cost equality",
            Box::new(|| {
                let small = from_checks(&oracle, &["lazy-cost-equality"]);
                let large = from_checks(&laziness, &["lazy-cost-equality"]);
                Outcome {
                    passed: small.passed && large.passed,
                    detail: format!("{} | {}", small.detail, large.detail),
                }
            }),
        ),
        (
            "entropy-corrected estimator mean",
            Box::new(|| {
                from_checks(
                    &estimators,
                    &[
                        "entropy-corrected-within-2se",
                        "entropy-corrected-runtime-under-30s",
                    ],
                )
            }),
        ),
        (
            "pce confidence",
            Box::new(|| from_checks(&estimators, &["pce-conservative"])),
        ),
        ("full-horizon correctness", Box::new(|| fh_outcome(&fh))),
        ("belief-core invariants", Box::new(belief_core)),
        ("determinism", Box::new(determinism)),
    ];

    let mut failed = 0;
    for (i, (name, check)) in criteria.into_iter().enumerate() {
        let o = check();
        failed += usize::from(!o.passed);
        println!(
            "{} {}. {name}: {}",
            if o.passed { "PASS" } else { "FAIL" },
            i + 1,
            o.detail
        );
    }
    println!("{} of 8 criteria passed", 8 - failed);
}

fn fh_outcome(report: &SuiteReport) -> Outcome {
    let names: Vec<&str> = report.checks.iter().map(|c| c.name.as_str()).collect();
    from_checks(report, &names)
}
