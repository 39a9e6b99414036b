use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lazy_pomdp::bench::{self, verify, BenchError, ScenarioConfig};

/// Runs belief-space planner benchmarks and acceptance suites.
#[derive(Parser)]
#[command(name = "lazybench", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every (solver, seed) cell of a scenario config.
    Run {
        config: PathBuf,
        /// Output directory; defaults to the config's `output` or `out/<name>`.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
    /// Run an acceptance suite and print a JSON report.
    Verify {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(verify::SUITES))]
        suite: String,
    },
    /// Print the expanded run matrix without running it.
    Enumerate { config: PathBuf },
}

const CONFIG_ERROR: u8 = 2;

fn config_error(e: BenchError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(CONFIG_ERROR)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { CONFIG_ERROR } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match cli.command {
        Command::Run {
            config,
            out,
            workers,
        } => {
            let cfg = match ScenarioConfig::load(&config) {
                Ok(c) => c,
                Err(e) => return config_error(e),
            };
            let dir = out
                .or_else(|| cfg.output.clone())
                .unwrap_or_else(|| PathBuf::from("out").join(&cfg.name));
            let records = match bench::run_matrix(&cfg, workers) {
                Ok(r) => r,
                Err(e @ BenchError::Config(_)) => return config_error(e),
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::FAILURE;
                }
            };
            if let Err(e) = bench::write_outputs(&dir, &cfg, &records, workers) {
                eprintln!("error: {e}");
                return ExitCode::FAILURE;
            }
            let failed = records.iter().filter(|r| !r.success).count();
            println!(
                "{} runs, {} failed, results in {}",
                records.len(),
                failed,
                dir.display()
            );
            if failed > 0 {
                ExitCode::FAILURE
            } else {
                ExitCode::SUCCESS
            }
        }
        Command::Verify { suite } => {
            let Some(report) = verify::run_suite(&suite) else {
                eprintln!("error: unknown suite {suite:?}");
                return ExitCode::from(CONFIG_ERROR);
            };
            match serde_json::to_string_pretty(&report) {
                Ok(s) => println!("{s}"),
                Err(e) => eprintln!("error: {e}"),
            }
            if report.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Command::Enumerate { config } => {
            let cfg = match ScenarioConfig::load(&config) {
                Ok(c) => c,
                Err(e) => return config_error(e),
            };
            println!("index,scenario,domain,solver,estimator,heuristic,seed");
            for r in cfg.expand() {
                println!(
                    "{},{},{},{},{},{},{}",
                    r.index,
                    cfg.name,
                    cfg.domain.id(),
                    r.solver.label(),
                    r.solver.estimator_label(),
                    r.solver.heuristic_label(),
                    r.seed
                );
            }
            ExitCode::SUCCESS
        }
    }
}
