use std::path::Path;
use std::process::{Command, Output};

fn mrplan(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mrplan"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

#[test]
fn oracle_run_writes_reports_and_exits_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let out = mrplan(
        &["run", "--env", "boxnet2", "--framework", "cmas,hmas1", "--robots", "4", "--trials", "2", "--out", "suite"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let suite = dir.path().join("suite");
    for f in ["results.jsonl", "suite.json", "reports/table_boxnet2.csv", "reports/summary.csv", "reports/series.csv"] {
        assert!(suite.join(f).exists(), "missing {f}");
    }
    let table = std::fs::read_to_string(suite.join("reports/table_boxnet2.csv")).unwrap();
    assert!(table.starts_with("metric,HMAS-1,CMAS\nsuccess_rate,100.0,100.0\n"), "{table}");
}

#[test]
fn infrastructure_errors_set_the_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = mrplan(
        &[
            "run", "--env", "boxlift", "--framework", "cmas", "--robots", "4", "--trials", "1", "--backend",
            "cassette:no-such-dir", "--out", "suite",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("infrastructure error"));
}

#[test]
fn replay_reproduces_results_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let run = mrplan(
        &["run", "--env", "warehouse", "--framework", "hmas2", "--robots", "4", "--trials", "2", "--out", "a"],
        dir.path(),
    );
    assert!(run.status.success());
    let replay = mrplan(&["replay", "--from", "a", "--out", "b"], dir.path());
    assert!(replay.status.success(), "{}", String::from_utf8_lossy(&replay.stderr));
    let read = |p: &str| std::fs::read(dir.path().join(p)).unwrap();
    assert_eq!(read("a/results.jsonl"), read("b/results.jsonl"));
}

#[test]
fn aggregate_and_gen_scenarios() {
    let dir = tempfile::tempdir().unwrap();
    assert!(mrplan(
        &["run", "--env", "boxnet1", "--framework", "cmas", "--robots", "4", "--trials", "1", "--out", "s"],
        dir.path()
    )
    .status
    .success());
    let agg = mrplan(&["aggregate", "--results", "s", "--out", "r"], dir.path());
    assert!(agg.status.success());
    assert!(dir.path().join("r/table_boxnet1.csv").exists());

    let gen = mrplan(&["gen-scenarios", "--env", "warehouse", "--robots", "4,6", "--trials", "2", "--out", "g"], dir.path());
    assert!(gen.status.success());
    let names: Vec<String> = std::fs::read_dir(dir.path().join("g"))
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    assert_eq!(names.len(), 4);
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("g/warehouse-r6-t01.json")).unwrap()).unwrap();
    assert_eq!(doc["spec"]["robot_count"], 6);
}

#[test]
fn bad_arguments_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    assert!(!mrplan(&["run", "--env", "mars"], dir.path()).status.success());
    assert_eq!(mrplan(&["run", "--profile", "nope", "--out", "x"], dir.path()).status.code(), Some(2));
    assert!(!mrplan(&["run", "--robots", "5", "--env", "boxnet1", "--out", "y"], dir.path()).status.success());
}
