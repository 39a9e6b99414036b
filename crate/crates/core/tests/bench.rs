use std::path::Path;
use std::process::Command;

use approx::assert_abs_diff_eq;
use lazy_pomdp::bench::{
    self, run_matrix, summarize, verify, write_outputs, BenchError, RunRecord, ScenarioConfig,
    RUNS_COLUMNS, SUMMARY_COLUMNS,
};

const LINE_WORLD: &str = r#"
name = "line"
seeds = [0, 1, 2]

[domain]
kind = "line-world"

[[solver]]
kind = "rtdp-bel"

[[solver]]
kind = "lazy-rtdp-bel"
estimator = { kind = "qmdp" }

[[solver]]
kind = "lao-star"

[[solver]]
kind = "lazy-lao-star"
estimator = { kind = "qmdp" }
"#;

/// Goal walled off from the start.
const SEALED_MAP: &str = "#######\n#S.#.G#\n#..#..#\n#######\n";

fn config_error(text: &str) -> String {
    match ScenarioConfig::parse(text, None) {
        Err(BenchError::Config(m)) => m,
        other => panic!("expected a config error, got {other:?}"),
    }
}

fn comparable(mut records: Vec<RunRecord>) -> Vec<RunRecord> {
    for r in &mut records {
        r.wall_time_s = 0.0;
    }
    records
}

#[test]
fn config_errors_are_reported() {
    let empty_seeds = LINE_WORLD.replace("seeds = [0, 1, 2]", "seeds = []");
    assert!(config_error(&empty_seeds).contains("seeds"));

    let unknown_fixture = r#"
        name = "x"
        seeds = [0]
        [domain]
        kind = "indoor-slip"
        map = { fixture = "no_such_map" }
        [[solver]]
        kind = "lao-star"
    "#;
    assert!(config_error(unknown_fixture).contains("no_such_map"));

    let no_estimator = r#"
        name = "x"
        seeds = [0]
        [domain]
        kind = "line-world"
        [[solver]]
        kind = "lazy-lao-star"
    "#;
    assert!(config_error(no_estimator).contains("estimator"));

    let unknown_key = LINE_WORLD.replace("name = \"line\"", "name = \"line\"\nbogus = 1");
    config_error(&unknown_key);

    let low_inflation = LINE_WORLD.replace("seeds = [0, 1, 2]", "seeds = [0]\ninflation = 0.5");
    assert!(config_error(&low_inflation).contains("inflation"));
}

#[test]
fn expansion_is_solver_major() {
    let cfg = ScenarioConfig::parse(LINE_WORLD, None).unwrap();
    let runs = cfg.expand();
    assert_eq!(runs.len(), 12);
    for (i, r) in runs.iter().enumerate() {
        assert_eq!(r.index, i);
        assert_eq!(r.seed, cfg.seeds[i % 3]);
        assert_eq!(r.solver, cfg.solvers[i / 3]);
    }
}

#[test]
fn line_world_matrix_reports_three() {
    let cfg = ScenarioConfig::parse(LINE_WORLD, None).unwrap();
    let records = run_matrix(&cfg, 2).unwrap();
    assert_eq!(records.len(), 12);
    for r in &records {
        assert!(r.success, "{}: {}", r.solver, r.error);
        assert_abs_diff_eq!(r.value.unwrap(), 3.0, epsilon = 1e-6);
        assert_abs_diff_eq!(r.policy_cost.unwrap(), 3.0, epsilon = 1e-6);
        assert_eq!(r.cost_mode, "exact");
    }
    let summary = summarize(&records);
    assert_eq!(summary.len(), 4);
    for row in &summary {
        assert!(row.included);
        assert_eq!(row.common_runs, 3);
        assert_abs_diff_eq!(row.mean_policy_cost.unwrap(), 3.0, epsilon = 1e-6);
    }
}

#[test]
fn worker_count_does_not_change_results() {
    let cfg = ScenarioConfig::parse(LINE_WORLD, None).unwrap();
    let one = comparable(run_matrix(&cfg, 1).unwrap());
    let four = comparable(run_matrix(&cfg, 4).unwrap());
    assert_eq!(one, four);
}

fn record(solver: &str, seed: u64, success: bool, cost: f64) -> RunRecord {
    RunRecord {
        scenario: "s".into(),
        domain: "d".into(),
        solver: solver.into(),
        estimator: String::new(),
        heuristic: "dist".into(),
        seed,
        success,
        converged: success,
        wall_time_s: 1.0,
        value: success.then_some(cost),
        policy_cost: success.then_some(cost),
        cost_mode: if success {
            "exact".into()
        } else {
            String::new()
        },
        transition_queries: 10,
        observation_queries: 10,
        validity_queries: 0,
        belief_transitions: 5,
        trials: 1,
        expansions: 1,
        evaluations: 0,
        replans: 0,
        error: String::new(),
    }
}

#[test]
fn rarely_successful_solvers_are_left_out_of_the_averages() {
    let mut records = Vec::new();
    for seed in 0..10 {
        records.push(record("a", seed, true, 2.0));
        // b succeeds on seeds 0..5 only; c on seed 0 only (10%).
        records.push(record("b", seed, seed < 5, 4.0));
        records.push(record("c", seed, seed == 0, 100.0));
    }
    let rows = summarize(&records);
    let names: Vec<&str> = rows.iter().map(|r| r.solver.as_str()).collect();
    assert_eq!(names, ["a", "b", "c"]);
    assert!(rows[0].included && rows[1].included && !rows[2].included);
    assert_eq!(rows[0].common_runs, 5);
    assert_eq!(rows[1].common_runs, 5);
    assert_eq!(rows[2].common_runs, 0);
    assert_eq!(rows[2].mean_policy_cost, None);
    assert_abs_diff_eq!(rows[1].success_rate, 0.5);
    assert_abs_diff_eq!(rows[0].mean_policy_cost.unwrap(), 2.0);
    assert_abs_diff_eq!(rows[1].mean_policy_cost.unwrap(), 4.0);
}

#[test]
fn exactly_twenty_percent_is_included() {
    let records: Vec<RunRecord> = (0..5).map(|s| record("a", s, s == 0, 1.0)).collect();
    let rows = summarize(&records);
    assert!(rows[0].included);
    assert_eq!(rows[0].common_runs, 1);
}

fn header(path: &Path) -> Vec<String> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.headers().unwrap().iter().map(String::from).collect()
}

#[test]
fn outputs_have_the_documented_columns() {
    let cfg = ScenarioConfig::parse(LINE_WORLD, None).unwrap();
    let records = run_matrix(&cfg, 1).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_outputs(dir.path(), &cfg, &records, 1).unwrap();
    assert_eq!(header(&dir.path().join("runs.csv")), RUNS_COLUMNS);
    assert_eq!(header(&dir.path().join("summary.csv")), SUMMARY_COLUMNS);
    let rows: Vec<RunRecord> = csv::Reader::from_path(dir.path().join("runs.csv"))
        .unwrap()
        .deserialize()
        .collect::<Result<_, _>>()
        .unwrap();
    assert_eq!(rows, records);
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("meta.json")).unwrap())
            .unwrap();
    assert_eq!(meta["runs"], 12);
    assert_eq!(meta["workers"], 1);
    assert_eq!(meta["config"]["name"], "line");
}

#[test]
fn unknown_suite_is_none() {
    assert!(verify::run_suite("no-such-suite").is_none());
    for id in verify::SUITES {
        assert!(!id.is_empty());
    }
}

#[test]
fn relative_map_paths_resolve_against_the_config() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("sealed.map"), SEALED_MAP).unwrap();
    let text = r#"
        name = "sealed"
        seeds = [0]
        timeout_secs = 5
        [domain]
        kind = "indoor-slip"
        map = { path = "sealed.map" }
        [[solver]]
        kind = "lao-star"
    "#;
    let path = dir.path().join("sealed.toml");
    std::fs::write(&path, text).unwrap();
    let cfg = ScenarioConfig::load(&path).unwrap();
    match bench::run_matrix(&cfg, 1) {
        Err(BenchError::Config(m)) => assert!(m.contains("unreachable"), "{m}"),
        other => panic!("expected a config error, got {other:?}"),
    }
}

/// Slow queries and a short deadline: valid config, every run times out.
const SLOW: &str = r#"
name = "slow"
seeds = [0, 1]
timeout_secs = 0.02
query_delay_us = 5000

[domain]
kind = "corridor"
length = 40

[[solver]]
kind = "lao-star"
"#;

#[test]
fn timed_out_runs_are_failed_records() {
    let cfg = ScenarioConfig::parse(SLOW, None).unwrap();
    let records = run_matrix(&cfg, 2).unwrap();
    assert_eq!(records.len(), 2);
    for r in &records {
        assert!(!r.success && !r.converged);
        assert!(!r.error.is_empty());
    }
    let rows = summarize(&records);
    assert!(!rows[0].included);
}

fn lazybench(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_lazybench"))
        .args(args)
        .output()
        .unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8_lossy(&out.stdout).into_owned(),
    )
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("line.toml");
    std::fs::write(&good, LINE_WORLD).unwrap();
    let out = dir.path().join("out");
    let (code, _) = lazybench(&[
        "run",
        good.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--workers",
        "2",
    ]);
    assert_eq!(code, 0);
    for f in ["runs.csv", "summary.csv", "meta.json"] {
        assert!(out.join(f).exists(), "{f}");
    }

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, LINE_WORLD.replace("seeds = [0, 1, 2]", "seeds = []")).unwrap();
    assert_eq!(lazybench(&["run", bad.to_str().unwrap()]).0, 2);
    assert_eq!(
        lazybench(&["run", dir.path().join("missing.toml").to_str().unwrap()]).0,
        2
    );
    assert_eq!(lazybench(&["enumerate", bad.to_str().unwrap()]).0, 2);
    assert_eq!(lazybench(&["verify", "no-such-suite"]).0, 2);
    assert_eq!(lazybench(&["frobnicate"]).0, 2);

    std::fs::write(dir.path().join("sealed.map"), SEALED_MAP).unwrap();
    let sealed = dir.path().join("sealed.toml");
    std::fs::write(
        &sealed,
        "name = \"sealed\"\nseeds = [0]\n[domain]\nkind = \"indoor-slip\"\n\
         map = { path = \"sealed.map\" }\n[[solver]]\nkind = \"lao-star\"\n",
    )
    .unwrap();
    assert_eq!(lazybench(&["run", sealed.to_str().unwrap()]).0, 2);

    let slow = dir.path().join("slow.toml");
    std::fs::write(&slow, SLOW).unwrap();
    let out = dir.path().join("slow-out");
    assert_eq!(
        lazybench(&[
            "run",
            slow.to_str().unwrap(),
            "--out",
            out.to_str().unwrap()
        ])
        .0,
        1
    );
    assert!(out.join("runs.csv").exists());
}

#[test]
fn cli_enumerate_lists_the_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("line.toml");
    std::fs::write(&path, LINE_WORLD).unwrap();
    let (code, stdout) = lazybench(&["enumerate", path.to_str().unwrap()]);
    assert_eq!(code, 0);
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(
        lines[0],
        "index,scenario,domain,solver,estimator,heuristic,seed"
    );
    assert_eq!(lines.len(), 13);
    assert!(lines[1].starts_with("0,line,line-world,rtdp-bel,"));
    assert!(lines[12].ends_with(",2"));
}

#[test]
fn cli_verify_prints_a_json_report() {
    let (code, stdout) = lazybench(&["verify", "fh-correctness"]);
    let report: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(report["suite"], "fh-correctness");
    assert_eq!(code, if report["passed"] == true { 0 } else { 1 });
    assert_eq!(code, 0);
}
