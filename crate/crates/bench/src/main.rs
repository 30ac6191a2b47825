use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use grrt::analysis::{run_verification, VerificationOptions};
use grrt::{make_problem, save_problem, ProblemKind, ProblemParams};
use grrt_bench::output::{CONFIG_FILE, SUMMARY_FILE, VERIFICATION_FILE};
use grrt_bench::summary::recorded_horizon;
use grrt_bench::{default_grid, read_trials, run_and_emit, summarize, Result, SuiteConfig};

#[derive(Parser)]
#[command(name = "bench", version, about = "Benchmark and verification runner for greedy bidirectional RRT*")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a trial matrix and write trials.csv, summary.json and verification.json.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Recompute summary.json from an existing trials.csv.
    Summarize {
        #[arg(long = "in")]
        input: PathBuf,
        /// Grid end time; defaults to the configured limit or the recorded horizon.
        #[arg(long)]
        time_limit: Option<f64>,
    },
    /// Run the Monte-Carlo verification suite and write verification.json.
    Verify {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Smaller sample counts, same tolerances.
        #[arg(long)]
        quick: bool,
    },
    /// Write a generated benchmark problem document.
    Problem {
        #[arg(long)]
        kind: ProblemKind,
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        emit: PathBuf,
        /// JSON file with generator parameters.
        #[arg(long)]
        params: Option<PathBuf>,
    },
}

fn execute(command: Command) -> Result<bool> {
    match command {
        Command::Run { config, out } => {
            let config = SuiteConfig::from_json(&std::fs::read_to_string(config)?)?.with_env_overrides()?;
            let (table, report) = run_and_emit(&config, &out)?;
            for cell in &table.cells {
                println!(
                    "{:<20} {:<18} n={:<3} trials={:<4} success={:.2} median final={} (shortcut {})",
                    cell.planner,
                    cell.problem,
                    cell.dim,
                    cell.trials,
                    cell.success.last().copied().unwrap_or(0.0),
                    cell.final_cost_median,
                    cell.simplified_final_median,
                );
            }
            for check in &report.checks {
                println!("{} {}: {}", if check.passed { "PASS" } else { "FAIL" }, check.name, check.detail);
            }
            Ok(report.all_passed())
        }
        Command::Summarize { input, time_limit } => {
            let records = read_trials(&input)?;
            let limit = match time_limit {
                Some(t) => t,
                None => match std::fs::read_to_string(input.join(CONFIG_FILE)) {
                    Ok(text) => SuiteConfig::from_json(&text)?.time_limit,
                    Err(_) => recorded_horizon(&records).max(grrt_bench::summary::GRID_START),
                },
            };
            let table = summarize(&records, &default_grid(limit))?;
            for w in &table.warnings {
                eprintln!("warning: {w}");
            }
            std::fs::write(input.join(SUMMARY_FILE), serde_json::to_string_pretty(&table)? + "\n")?;
            println!("{} cells written to {}", table.cells.len(), input.join(SUMMARY_FILE).display());
            Ok(true)
        }
        Command::Verify { out, seed, quick } => {
            let base = if quick { VerificationOptions::quick() } else { VerificationOptions::default() };
            let report = run_verification(&VerificationOptions { seed, ..base });
            std::fs::create_dir_all(&out)?;
            std::fs::write(out.join(VERIFICATION_FILE), serde_json::to_string_pretty(&report)? + "\n")?;
            for check in &report.checks {
                println!(
                    "{} {} ({:.2} s): {}",
                    if check.passed { "PASS" } else { "FAIL" },
                    check.name,
                    check.seconds,
                    check.detail
                );
            }
            Ok(report.all_passed())
        }
        Command::Problem { kind, dim, emit, params } => {
            let params = match params {
                Some(p) => serde_json::from_str(&std::fs::read_to_string(p)?)?,
                None => ProblemParams::default(),
            };
            let problem = make_problem(kind, dim, &params)?;
            std::fs::write(&emit, save_problem(&problem) + "\n")?;
            println!("wrote {} ({} obstacles)", emit.display(), problem.obstacles().len());
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    env_logger::init();
    match execute(Cli::parse().command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
