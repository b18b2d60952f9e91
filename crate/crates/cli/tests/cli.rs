use std::path::Path;
use std::process::{Command, Output};

fn pnrd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pnrd")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn validate_reports_located_errors() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.pn");
    std::fs::write(&bad, "places p : Int = [1];\ntransitions t;\narcs p -> t : zz;").unwrap();
    let o = pnrd(&["validate", bad.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("3:"));
    assert!(pnrd(&["validate", "fig3"]).status.success());
}

#[test]
fn soundness_and_deadlocks_of_fig1() {
    let o = pnrd(&["soundness", "fig1"]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("sound"));
    let o = pnrd(&["deadlocks", "fig1"]);
    assert!(stdout(&o).starts_with("1 deadlocks"));
}

#[test]
fn json_nets_load_and_unsound_ones_fail() {
    let dir = tempfile::tempdir().unwrap();
    let net = dir.path().join("net.json");
    // `t2` can never fire: a dead transition.
    std::fs::write(
        &net,
        r#"{"places": ["i", "m", "f"], "transitions": ["t1", "t2"],
            "arcs": [{"from": "i", "to": "t1"}, {"from": "t1", "to": "f"},
                     {"from": "i", "to": "t2"}, {"from": "m", "to": "t2"}, {"from": "t2", "to": "f"},
                     {"from": "t1", "to": "m"}],
            "marking": {"i": 1}, "source": "i", "sink": "f"}"#,
    )
    .unwrap();
    let o = pnrd(&["soundness", net.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1), "{}", stdout(&o));
    assert!(stdout(&o).starts_with("unsound"));
    let o = pnrd(&["explore", net.to_str().unwrap(), "--format", "json"]);
    let g: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(g["nodes"].as_array().unwrap().len(), 2);
}

#[test]
fn explore_bounds_and_formats() {
    let o = pnrd(&["explore", "fig3", "--max-states", "50"]);
    assert!(stdout(&o).contains("states: 50\n"));
    assert!(stdout(&o).contains("truncated: true"));
    let o = pnrd(&["explore", "fig1", "--format", "dot"]);
    assert!(stdout(&o).starts_with("digraph"));
}

#[test]
fn violated_invariants_exit_nonzero_with_a_path() {
    let src = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("../../models/paper/fig4.pn")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let mutant = dir.path().join("mutant.pn");
    std::fs::write(&mutant, src.replace("r1 != r2 && r1 != r3 && r2 != r3 && ", "")).unwrap();
    let o = pnrd(&["check", mutant.to_str().unwrap(), "--invariant", "distinct roles"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).starts_with("violated after 4 steps"));
    let o = pnrd(&["check", "fig4", "--invariant", "distinct roles"]);
    assert!(o.status.success());
    let o = pnrd(&["check", "fig4", "--invariant", "nope"]);
    assert!(!o.status.success());
}

#[test]
fn simulate_replay_and_export() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.json");
    let out = out.to_str().unwrap();
    assert!(pnrd(&["simulate", "fig3", "--seed", "3", "--max-steps", "25", "--traces", "10", "--out", out]).status.success());
    let o = pnrd(&["replay", "fig3", out]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!pnrd(&["replay", "fig2", out]).status.success());

    let traces: Vec<serde_json::Value> = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    let steps: usize = traces.iter().map(|t| t["steps"].as_array().unwrap().len()).sum();
    let o = pnrd(&["export-log", out, "--format", "csv"]);
    let csv = stdout(&o);
    assert!(csv.starts_with("trace,step,timestamp,transition,"));
    assert_eq!(csv.lines().count(), steps + 1);
}
