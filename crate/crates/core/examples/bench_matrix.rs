//! Runs a scenario config in-process and prints the summary table.
//!
//! ```text
//! cargo run --example bench_matrix -- configs/acceptance/line_world.toml
//! ```

use std::path::PathBuf;

use lazy_pomdp::bench::{run_matrix, summarize, ScenarioConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| {
            PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs/acceptance/line_world.toml")
        });
    let cfg = ScenarioConfig::load(&path)?;
    let records = run_matrix(&cfg, 2)?;
    println!("{} runs", records.len());
    for row in summarize(&records) {
        println!(
            "{:<32} success {:>5.2}  cost {:>8}  belief transitions {:>8}",
            row.solver,
            row.success_rate,
            row.mean_policy_cost
                .map_or("-".into(), |c| format!("{c:.4}")),
            row.mean_belief_transitions
                .map_or("-".into(), |c| format!("{c:.1}")),
        );
    }
    Ok(())
}
