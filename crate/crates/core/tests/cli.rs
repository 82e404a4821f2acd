mod common;

use std::io::Write as _;
use std::path::Path;
use std::process::{Command, Output, Stdio};

use behcomp::io::parse_problem;
use behcomp::simrel::sim_equivalent;

use common::*;

const BIN: &str = env!("CARGO_BIN_EXE_behcomp");

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name).display().to_string()
}

fn behcomp(args: &[&str], stdin: &str) -> Output {
    let mut child = Command::new(BIN)
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(stdin.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn check_reports_inexact_target() {
    let o = behcomp(&["check", "--input", &fixture("smarthouse.toml")], "");
    assert_eq!(stdout(&o).trim(), "exact: false");
    assert_eq!(o.status.code(), Some(1));
    let o = behcomp(&["check", "--input", &fixture("smarthouse_approx.toml")], "");
    assert_eq!(stdout(&o).trim(), "exact: true");
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn approx_writes_a_problem_document() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("approx.toml");
    let o = behcomp(
        &["approx", "--input", &fixture("smarthouse.toml"), "--output", out.to_str().unwrap()],
        "",
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let p = parse_problem(&std::fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(p.system, golden().system);
    assert!(sim_equivalent(&p.target, &golden_approx().target));
}

#[test]
fn interactive_rejection_keeps_the_state() {
    let o = behcomp(
        &["run", "--input", &fixture("smarthouse.toml"), "--interactive", "--resolver", "adversarial"],
        "t0 lightOn t1\nt1 movie t2\nt2 web t3\nnot a request\nt2 game t3\n",
    );
    assert!(o.status.success());
    let lines: Vec<String> = stdout(&o).lines().map(String::from).collect();
    assert_eq!(
        lines,
        [
            "honored k=4 sys=(a0,b0,c0,d1)",
            "honored k=1 sys=(a1,b0,c0,d1)",
            "rejected",
            "rejected",
            "honored k=1 sys=(a2,b0,c0,d1)",
        ]
    );
}

#[test]
fn seeded_runs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let requests = dir.path().join("requests.txt");
    let cycle = "t0 lightOn t1\nt1 music t2\nt2 radio t3\nt3 stop t4\nt4 lightOff t0\n";
    std::fs::write(&requests, cycle.repeat(20)).unwrap();
    let args = |seed: &'static str| {
        vec![
            "run".to_string(),
            "--input".into(),
            fixture("smarthouse.toml"),
            "--requests".into(),
            requests.display().to_string(),
            "--seed".into(),
            seed.into(),
        ]
    };
    let run = |seed| {
        let a = args(seed);
        let refs: Vec<&str> = a.iter().map(String::as_str).collect();
        behcomp(&refs, "").stdout
    };
    let first = run("42");
    assert_eq!(first, run("42"));
    let text = String::from_utf8(first).unwrap();
    assert_eq!(text.lines().count(), 100);
    assert!(text.lines().all(|l| l.starts_with("honored")));
}

#[test]
fn approximation_space_reports_the_reached_state() {
    let o = behcomp(
        &["run", "--input", &fixture("smarthouse.toml"), "--interactive", "--space", "approx"],
        "q0 lightOn q1\nq1 web q2\n",
    );
    let lines: Vec<String> = stdout(&o).lines().map(String::from).collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("honored k=4 sys=(a0,b0,c0,d1) at=q"), "{}", lines[0]);
    assert_eq!(lines[1], "rejected");
}

#[test]
fn max_steps_closes_the_session() {
    let o = behcomp(
        &["run", "--input", &fixture("smarthouse.toml"), "--interactive", "--max-steps", "1"],
        "t0 lightOn t1\nt1 music t2\nt2 radio t3\n",
    );
    assert_eq!(stdout(&o).lines().collect::<Vec<_>>(), ["honored k=4 sys=(a0,b0,c0,d1)", "closed"]);
}

#[test]
fn game_approx_rejects_nondeterministic_behaviors() {
    let o = behcomp(&["game-approx", "--input", &fixture("smarthouse.toml")], "");
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(
        err.contains("E_NONDETERMINISTIC_SYSTEM: behavior `GameDevice` is nondeterministic"),
        "{err}"
    );
}

#[test]
fn game_approx_on_a_deterministic_system() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("det.toml");
    let p = golden();
    let sys = behcomp::SystemSpec::new(p.system.behaviors()[1..].to_vec()).unwrap();
    std::fs::write(&input, behcomp::io::serialize_problem(&sys, &p.target, p.policy)).unwrap();
    let o = behcomp(&["game-approx", "--input", input.to_str().unwrap()], "");
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = parse_problem(&stdout(&o)).unwrap();
    assert!(sim_equivalent(&out.target, &behcomp::compute_approx(&sys, &p.target)));
}

#[test]
fn exports() {
    let input = fixture("smarthouse.toml");
    let o = behcomp(&["export", "--input", &input, "--format", "ispl"], "");
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("Semantics = SA;"));
    let o = behcomp(&["export", "--input", &input, "--format", "dot", "--graph", "pruned", "--show-removed"], "");
    assert!(stdout(&o).starts_with("digraph \"pruned\" {"));
    assert!(stdout(&o).contains("style=dashed"));
    let o = behcomp(&["export", "--input", &input, "--format", "dot", "--graph", "approx"], "");
    assert!(o.status.success());
    assert!(!stdout(&o).contains("web"));
}

#[test]
fn bad_input_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("bad.toml");
    std::fs::write(&input, "[[behavior]]\nname = 1\n").unwrap();
    let o = behcomp(&["check", "--input", input.to_str().unwrap()], "");
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8(o.stderr).unwrap().starts_with("error: E_PARSE"));
}
