//! The `qnetsup` binary: listing, exit codes, seeds and report determinism.

use std::process::{Command, Output};

fn qnetsup(args: &[&str], seed_env: Option<&str>) -> Output {
    let mut c = Command::new(env!("CARGO_BIN_EXE_qnetsup"));
    c.args(args).env_remove("QNETSUP_SEED");
    if let Some(s) = seed_env {
        c.env("QNETSUP_SEED", s);
    }
    c.output().expect("binary runs")
}

fn topology() -> String {
    concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/two_branch.json").to_string()
}

fn report(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).expect("JSON report on stdout")
}

#[test]
fn list_names_every_scenario() {
    let o = qnetsup(&["list"], None);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    for name in qnetsup::scenarios::scenario_names() {
        assert!(text.lines().any(|l| l.starts_with(name)), "{name} missing");
    }
}

#[test]
fn passing_scenario_exits_zero() {
    let o = qnetsup(&["run", "entanglement_decision", "--seed", "3"], None);
    assert_eq!(o.status.code(), Some(0));
    assert!(report(&o).is_array() || report(&o).is_object());
}

#[test]
fn failing_checks_exit_one() {
    let o = qnetsup(&["run", "smolin", "--seed", "3"], None);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("FAIL"));
}

#[test]
fn configuration_errors_exit_two() {
    assert_eq!(qnetsup(&["run", "no_such_scenario"], None).status.code(), Some(2));
    assert_eq!(qnetsup(&["run", "custom"], None).status.code(), Some(2));
    assert_eq!(qnetsup(&["run", "encoding"], Some("seven")).status.code(), Some(2));
    assert_eq!(qnetsup(&["run", "encoding", "--reps", "0"], None).status.code(), Some(2));
    assert_eq!(qnetsup(&["run", "encoding", "--codewords", "01,1"], None).status.code(), Some(2));
    assert_eq!(qnetsup(&["run", "paths", "--topology", &topology()], None).status.code(), Some(2));
}

#[test]
fn seed_flag_and_environment_agree() {
    let a = qnetsup(&["run", "encoding", "--seed", "11"], None);
    let b = qnetsup(&["run", "encoding"], Some("11"));
    assert_eq!(a.stdout, b.stdout);
    let c = qnetsup(&["run", "encoding", "--seed", "12"], None);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn sampled_runs_repeat_exactly() {
    let args = ["run", "destinations", "--seed", "5", "--sample", "--draws", "4"];
    let a = qnetsup(&args, None);
    let b = qnetsup(&args, None);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn repetitions_pass() {
    let o = qnetsup(&["run", "encoding", "--reps", "5", "--draws", "3"], None);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn custom_topology_runs() {
    let o = qnetsup(&["run", "custom", "--topology", &topology()], None);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("custom"));
}

#[test]
fn out_file_matches_stdout() {
    let path = std::env::temp_dir().join(format!("qnetsup-cli-{}.json", std::process::id()));
    let p = path.to_str().unwrap();
    let a = qnetsup(&["run", "nonlinearity", "--seed", "1", "--out", p], None);
    let b = qnetsup(&["run", "nonlinearity", "--seed", "1"], None);
    assert_eq!(a.status.code(), Some(0));
    assert!(a.stdout.is_empty());
    assert_eq!(std::fs::read(&path).unwrap(), b.stdout);
    let _ = std::fs::remove_file(&path);
}
