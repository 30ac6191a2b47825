use std::fs;
use std::process::Command;

use grrt::{load_problem, make_problem, ProblemKind, ProblemParams};
use grrt_bench::{read_trials, SummaryTable};

const CONFIG: &str = r#"{
  "format": 1,
  "planners": [{"id": "grrt_star"}, {"id": "rrt_connect"}],
  "problems": [{"kind": "narrow_passage", "dims": [2]}],
  "trials": 3,
  "time_limit": 0.02,
  "clock": {"mode": "virtual", "seconds_per_iteration": 1e-5},
  "verify": false
}"#;

fn bench() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_bench"));
    c.env_remove("BENCH_SEED");
    c
}

#[test]
fn run_writes_consistent_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("suite.json");
    fs::write(&config, CONFIG).unwrap();
    let out = dir.path().join("a");
    let status = bench().args(["run", "--config"]).arg(&config).arg("--out").arg(&out).status().unwrap();
    assert!(status.success());

    let records = read_trials(&out).unwrap();
    assert_eq!(records.len(), 6);
    for r in &records {
        r.check().unwrap();
    }
    let table: SummaryTable =
        serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(table.cells.len(), 2);
    assert_eq!(table.grid.len(), 200);

    // Re-summarizing the stored trials reproduces the summary.
    let before = fs::read_to_string(out.join("summary.json")).unwrap();
    assert!(bench().args(["summarize", "--in"]).arg(&out).status().unwrap().success());
    assert_eq!(fs::read_to_string(out.join("summary.json")).unwrap(), before);

    // A second run of the same configuration is byte-identical.
    let again = dir.path().join("b");
    assert!(bench().args(["run", "--config"]).arg(&config).arg("--out").arg(&again).status().unwrap().success());
    assert_eq!(
        fs::read(out.join("trials.csv")).unwrap(),
        fs::read(again.join("trials.csv")).unwrap()
    );
}

#[test]
fn seed_override_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("suite.json");
    fs::write(&config, CONFIG).unwrap();
    let status = bench()
        .env("BENCH_SEED", "40")
        .args(["run", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(dir.path())
        .status()
        .unwrap();
    assert!(status.success());
    let seeds: Vec<u64> = read_trials(dir.path()).unwrap().iter().map(|r| r.seed).collect();
    assert_eq!(seeds, vec![40, 41, 42, 40, 41, 42]);
}

#[test]
fn problem_command_emits_loadable_documents() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.json");
    let status = bench()
        .args(["problem", "--kind", "double_enclosure", "--dim", "4", "--emit"])
        .arg(&path)
        .status()
        .unwrap();
    assert!(status.success());
    let loaded = load_problem(&fs::read_to_string(&path).unwrap()).unwrap();
    let made = make_problem(ProblemKind::DoubleEnclosure, 4, &ProblemParams::default()).unwrap();
    assert_eq!(loaded, made);
}

#[test]
fn bad_input_exits_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("suite.json");
    fs::write(&config, CONFIG.replace("grrt_star\"", "no_such_planner\"")).unwrap();
    let status = bench().args(["run", "--config"]).arg(&config).arg("--out").arg(dir.path()).status().unwrap();
    assert_eq!(status.code(), Some(2));
    let status = bench()
        .args(["problem", "--kind", "maze", "--dim", "2", "--emit"])
        .arg(dir.path().join("x.json"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}
