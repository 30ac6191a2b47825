//! Result files: `trials.csv`, `summary.json`, `verification.json`.

use std::fs;
use std::path::{Path, PathBuf};

use grrt::analysis::VerificationReport;
use grrt::{Cost, EventTag, PlannerEvent};

use crate::error::{BenchError, Result};
use crate::suite::TrialRecord;
use crate::summary::SummaryTable;

pub const TRIALS_FILE: &str = "trials.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const VERIFICATION_FILE: &str = "verification.json";
pub const CONFIG_FILE: &str = "config.json";

pub const TRIALS_HEADER: [&str; 7] = ["planner", "problem", "dim", "seed", "elapsed_s", "cost", "tag"];

const SIMPLIFIED_INITIAL: &str = "simplified_initial";
const SIMPLIFIED_FINAL: &str = "simplified_final";

/// Shortest decimal that parses back to the same value; `inf` for infinity.
fn number(v: f64) -> String {
    format!("{v}")
}

fn parse_tag(text: &str) -> Option<EventTag> {
    match text {
        "initial" => Some(EventTag::Initial),
        "improvement" => Some(EventTag::Improvement),
        "final" => Some(EventTag::Final),
        _ => None,
    }
}

/// Serializes records, one row per event followed by the two shortcut rows
/// of each trial. The shortcut rows carry the time of the event they refine.
pub fn trials_csv(records: &[TrialRecord]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    w.write_record(TRIALS_HEADER)?;
    for r in records {
        let (dim, seed) = (r.dim.to_string(), r.seed.to_string());
        let mut row = |elapsed: f64, cost: Cost, tag: &str| {
            w.write_record([
                r.planner.as_str(),
                r.problem.as_str(),
                &dim,
                &seed,
                &number(elapsed),
                &cost.to_string(),
                tag,
            ])
        };
        for e in &r.events {
            row(e.elapsed, e.cost, e.tag.as_str())?;
        }
        let end = r.last().map_or(0.0, |e| e.elapsed);
        let start = r.initial().map_or(end, |e| e.elapsed);
        row(start, r.simplified_initial, SIMPLIFIED_INITIAL)?;
        row(end, r.simplified_final, SIMPLIFIED_FINAL)?;
    }
    let bytes = w.into_inner().map_err(|e| BenchError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

/// Parses [`trials_csv`] output back into records.
pub fn parse_trials_csv(text: &str) -> Result<Vec<TrialRecord>> {
    let mut reader = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if header != TRIALS_HEADER {
        return Err(BenchError::Trials(format!("unexpected header {header:?}")));
    }
    let mut records: Vec<TrialRecord> = Vec::new();
    let mut open = false;
    for (line, row) in reader.records().enumerate() {
        let row = row?;
        let bad = |what: &str| BenchError::Trials(format!("data row {}: {what}", line + 1));
        let dim: usize = row[2].parse().map_err(|_| bad("dim"))?;
        let seed: u64 = row[3].parse().map_err(|_| bad("seed"))?;
        let elapsed: f64 = row[4].parse().map_err(|_| bad("elapsed_s"))?;
        let cost = row[5]
            .parse::<f64>()
            .ok()
            .and_then(|v| Cost::new(v).ok())
            .ok_or_else(|| bad("cost"))?;
        let same = records.last().is_some_and(|r: &TrialRecord| {
            r.planner == row[0] && r.problem == row[1] && r.dim == dim && r.seed == seed
        });
        if !(open && same) {
            if open {
                return Err(bad("trial ended without shortcut rows"));
            }
            records.push(TrialRecord {
                planner: row[0].to_string(),
                problem: row[1].to_string(),
                dim,
                seed,
                events: Vec::new(),
                simplified_initial: Cost::INFINITE,
                simplified_final: Cost::INFINITE,
            });
            open = true;
        }
        let current = records.last_mut().expect("record opened");
        match &row[6] {
            SIMPLIFIED_INITIAL => current.simplified_initial = cost,
            SIMPLIFIED_FINAL => {
                current.simplified_final = cost;
                open = false;
            }
            tag => {
                let tag = parse_tag(tag).ok_or_else(|| bad("tag"))?;
                current.events.push(PlannerEvent { elapsed, cost, tag });
            }
        }
    }
    if open {
        return Err(BenchError::Trials("last trial has no shortcut rows".into()));
    }
    Ok(records)
}

pub fn read_trials(dir: &Path) -> Result<Vec<TrialRecord>> {
    parse_trials_csv(&fs::read_to_string(dir.join(TRIALS_FILE))?)
}

/// Writes the three result files into `out_dir`, creating it if needed.
pub fn emit(
    records: &[TrialRecord],
    table: &SummaryTable,
    report: &VerificationReport,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir)?;
    let files = [
        (TRIALS_FILE, trials_csv(records)?),
        (SUMMARY_FILE, serde_json::to_string_pretty(table)? + "\n"),
        (VERIFICATION_FILE, serde_json::to_string_pretty(report)? + "\n"),
    ];
    let mut written = Vec::new();
    for (name, text) in files {
        let path = out_dir.join(name);
        fs::write(&path, text)?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn event(t: f64, c: f64, tag: EventTag) -> PlannerEvent {
        PlannerEvent {
            elapsed: t,
            cost: if c.is_finite() { Cost::new(c).unwrap() } else { Cost::INFINITE },
            tag,
        }
    }

    fn records() -> Vec<TrialRecord> {
        vec![
            TrialRecord {
                planner: "grrt_star".into(),
                problem: "narrow_passage".into(),
                dim: 4,
                seed: 3,
                events: vec![
                    event(0.000123, 1.2345678901234567, EventTag::Initial),
                    event(0.5, 0.7, EventTag::Improvement),
                    event(1.0, 0.6999999999999999, EventTag::Final),
                ],
                simplified_initial: Cost::new(0.9).unwrap(),
                simplified_final: Cost::new(0.65).unwrap(),
            },
            TrialRecord {
                planner: "grrt_star".into(),
                problem: "narrow_passage".into(),
                dim: 4,
                seed: 4,
                events: vec![event(1.0, f64::INFINITY, EventTag::Final)],
                simplified_initial: Cost::INFINITE,
                simplified_final: Cost::INFINITE,
            },
        ]
    }

    #[test]
    fn header_is_exact() {
        let text = trials_csv(&[]).unwrap();
        assert_eq!(text, "planner,problem,dim,seed,elapsed_s,cost,tag\n");
        assert!(parse_trials_csv(&text).unwrap().is_empty());
    }

    #[test]
    fn round_trip_is_exact() {
        let text = trials_csv(&records()).unwrap();
        assert_eq!(parse_trials_csv(&text).unwrap(), records());
        assert!(text.contains("grrt_star,narrow_passage,4,4,1,inf,final\n"));
        assert!(text.contains(",simplified_initial\n"));
    }

    #[test]
    fn malformed_rows_are_rejected() {
        let text = trials_csv(&records()).unwrap();
        assert!(parse_trials_csv(&text.replace(",improvement", ",better")).is_err());
        assert!(parse_trials_csv(&text.replace("planner,", "name,")).is_err());
        let truncated: String = text.lines().take(3).map(|l| format!("{l}\n")).collect();
        assert!(parse_trials_csv(&truncated).is_err());
    }
}
