//! Exit codes, output files and determinism of the command-line front end.

use std::fs;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_onebit-mac");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("spawning the CLI")
}

fn code(args: &[&str]) -> i32 {
    run(args).status.code().unwrap_or(-1)
}

#[test]
fn help_and_version_succeed() {
    assert_eq!(code(&["--help"]), 0);
    assert_eq!(code(&["--version"]), 0);
    assert_eq!(code(&["solve", "--help"]), 0);
}

#[test]
fn usage_errors_exit_64() {
    assert_eq!(code(&[]), 64);
    assert_eq!(code(&["solve", "--p1", "1", "--p2", "1"]), 64);
    assert_eq!(code(&["solve", "--lambda", "0", "--p1", "1", "--p2", "1"]), 64);
    assert_eq!(code(&["solve", "--lambda", "1", "--p1", "-1", "--p2", "1"]), 64);
    assert_eq!(code(&["solve", "--lambda", "1", "--p1", "1", "--p2", "nan"]), 64);
    assert_eq!(code(&["solve", "--lambda", "1", "--p1", "1", "--p2", "1", "--multistarts", "0"]), 64);
    assert_eq!(code(&["solve", "--lambda", "1", "--p1", "1", "--p2", "1", "--threshold", "80"]), 64);
    assert_eq!(code(&["remark2", "--grid-n", "1"]), 64);
    assert_eq!(code(&["--workers", "0", "selftest"]), 64);
    assert_eq!(code(&["selftest", "--bogus"]), 64);
    assert_eq!(code(&["trace", "--p1", "1", "--p2", "1"]), 64);
}

#[test]
fn selftest_passes_and_detects_an_injected_fault() {
    let out = run(&["selftest"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.lines().filter(|l| l.starts_with("PASS")).count() >= 10);
    assert!(text.contains("margin="));
    let bad = run(&["selftest", "--inject-fault"]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stdout).contains("FAIL mixture_identities"));
}

#[test]
fn solve_is_deterministic_and_certified() {
    let args = ["solve", "--lambda", "0.5", "--p1", "0.5", "--p2", "1", "--multistarts", "3", "--seed", "7"];
    let a = run(&args);
    let b = run(&[&args[..], &["--workers", "1"]].concat());
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let v: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["kkt"]["passed"], true);
}

#[test]
fn solve_writes_to_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.json");
    let out = run(&["solve", "--lambda", "1", "--p1", "2", "--p2", "0", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    assert!((v["value"].as_f64().unwrap() - 0.602_596_980_715).abs() < 1e-9);
}

#[test]
fn verify_classifies_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, body: &str| {
        let p = dir.path().join(name);
        fs::write(&p, body).unwrap();
        p.to_str().unwrap().to_string()
    };
    let root2 = std::f64::consts::SQRT_2;
    let good = write("good.json", &format!(r#"{{"points": [{}, {}], "weights": [0.5, 0.5]}}"#, -root2, root2));
    let off = write("off.json", r#"{"points": [-1.0, 1.2], "weights": [0.5, 0.5]}"#);
    let silent = write("silent.json", r#"{"points": [0.0], "weights": [1.0]}"#);
    let torn = write("torn.json", r#"{"points": [1.0, 2.0], "weights": [0.5"#);
    let mass = write("mass.json", r#"{"points": [1.0, 2.0], "weights": [0.5, 0.6]}"#);
    let extra = write("extra.json", r#"{"points": [0.0], "weights": [1.0], "color": 3}"#);
    let verify = |f1: &str, f2: &str, p1: &str| code(&["verify", "--f1", f1, "--f2", f2, "--lambda", "1", "--p1", p1, "--p2", "0"]);
    assert_eq!(verify(&good, &silent, "2"), 0);
    assert_eq!(verify(&off, &silent, "2"), 2);
    // Feasible shape, but more power than allowed.
    assert_eq!(verify(&good, &silent, "1"), 2);
    assert_eq!(verify(&torn, &silent, "2"), 65);
    assert_eq!(verify(&mass, &silent, "2"), 65);
    assert_eq!(verify(&extra, &silent, "2"), 65);
    assert_eq!(verify(&dir.path().join("missing.json").to_string_lossy(), &silent, "2"), 1);
}

#[test]
fn trace_writes_all_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("region");
    let status = code(&["trace", "--lambdas", "2,0.5,1", "--p1", "0", "--p2", "0", "--out", out_dir.to_str().unwrap()]);
    assert_eq!(status, 0);
    let csv = fs::read_to_string(out_dir.join("region.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("lambda,r1,r2,corner,atoms,kkt_passed"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 4);
    assert!(rows[0].starts_with("0.5,0,0,A,1,"));
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(out_dir.join("region.json")).unwrap()).unwrap();
    assert_eq!(json.as_array().unwrap().len(), 4);
    let dat = fs::read_to_string(out_dir.join("boundary.dat")).unwrap();
    assert_eq!(dat.lines().filter(|l| !l.starts_with('#')).count(), 4);
}

#[test]
fn remark2_reports_the_gap() {
    let out = run(&["remark2", "--grid-n", "5"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["gap"].as_f64().unwrap() > 0.0);
    assert!((v["min_levy_distance"].as_f64().unwrap() - 0.1875).abs() < 1e-12);
}
