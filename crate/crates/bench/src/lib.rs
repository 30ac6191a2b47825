//! Benchmark harness for the greedy bidirectional RRT* planner: runs a
//! matrix of seeded trials, aggregates cost-versus-time statistics and writes
//! CSV/JSON results.

pub mod config;
pub mod error;
pub mod output;
pub mod suite;
pub mod summary;

pub use config::{PlannerEntry, ProblemEntry, SuiteConfig};
pub use error::{BenchError, Result};
pub use output::{emit, parse_trials_csv, read_trials, trials_csv};
pub use suite::{run_suite, run_trial, TrialRecord};
pub use summary::{log_grid, mann_whitney, median, median_ci_ranks, summarize, SummaryCell, SummaryTable};

use grrt::analysis::{run_verification, VerificationOptions, VerificationReport};

/// Default summary grid for a time limit.
pub fn default_grid(time_limit: f64) -> Vec<f64> {
    log_grid(summary::GRID_START.min(time_limit), time_limit, summary::GRID_POINTS)
}

/// Runs the suite and, if enabled, the verification checks; writes all
/// result files plus a copy of the effective configuration.
pub fn run_and_emit(config: &SuiteConfig, out_dir: &std::path::Path) -> Result<(SummaryTable, VerificationReport)> {
    let records = run_suite(config)?;
    let table = summarize(&records, &default_grid(config.time_limit))?;
    let report = if config.verify {
        run_verification(&VerificationOptions {
            seed: config.seed_base,
            ..VerificationOptions::default()
        })
    } else {
        VerificationReport {
            format: grrt::analysis::VERIFICATION_FORMAT_VERSION,
            seed: config.seed_base,
            checks: Vec::new(),
        }
    };
    emit(&records, &table, &report, out_dir)?;
    std::fs::write(out_dir.join(output::CONFIG_FILE), config.to_json() + "\n")?;
    Ok((table, report))
}
