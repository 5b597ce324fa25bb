//! End-to-end tests of the command-line binary: file formats, exit codes,
//! and byte-level determinism.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_entropic-pfr"))
}

fn write_temp(name: &str, content: &str) -> PathBuf {
    let dir = std::env::temp_dir().join("entropic-pfr-cli-tests");
    fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    fs::write(&path, content).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

const BIT_Z4: &str = r#"{"group":{"orders":[4]},"pmf":[{"x":[0],"p":"1/2"},{"x":[1],"p":"1/2"}]}"#;

#[test]
fn entropy_and_rdist_values() {
    let d = write_temp("bit.json", BIT_Z4);
    let out = run(&["entropy", d.to_str().unwrap()]);
    assert!(out.status.success());
    let v: f64 = String::from_utf8_lossy(&out.stdout).trim().parse().unwrap();
    assert!((v - std::f64::consts::LN_2).abs() < 1e-9);

    let out = run(&["rdist", d.to_str().unwrap(), d.to_str().unwrap()]);
    assert!(out.status.success());
    let v: f64 = String::from_utf8_lossy(&out.stdout).trim().parse().unwrap();
    assert!((v - 0.5 * std::f64::consts::LN_2).abs() < 1e-9);
}

#[test]
fn multidist_of_subgroup_uniform_tuple() {
    let uh = r#"{"group":{"orders":[4]},"pmf":[{"x":[0],"p":"1/2"},{"x":[2],"p":"1/2"}]}"#;
    let t = write_temp(
        "uh_tuple.json",
        &format!(r#"{{"members":[{uh},{uh},{uh},{uh}]}}"#),
    );
    let out = run(&["multidist", t.to_str().unwrap()]);
    assert!(out.status.success());
    let v: f64 = String::from_utf8_lossy(&out.stdout).trim().parse().unwrap();
    assert!(v.abs() < 1e-12);
}

#[test]
fn decrement_zero_steps_on_subgroup_uniform() {
    let uh = r#"{"group":{"orders":[4]},"pmf":[{"x":[0],"p":"1/2"},{"x":[2],"p":"1/2"}]}"#;
    let t = write_temp(
        "dec_tuple.json",
        &format!(r#"{{"members":[{uh},{uh},{uh},{uh}]}}"#),
    );
    let out = run(&["decrement", t.to_str().unwrap()]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    let last = text.lines().last().unwrap();
    let summary: serde_json::Value = serde_json::from_str(last).unwrap();
    assert_eq!(summary["summary"]["steps"], 0);
    assert_eq!(summary["summary"]["stop"], "converged");
    assert_eq!(
        summary["summary"]["subgroup"],
        serde_json::json!([[0], [2]])
    );
}

#[test]
fn decrement_monotone_trace_on_bits() {
    let t = write_temp(
        "dec_bits.json",
        &format!(r#"{{"members":[{BIT_Z4},{BIT_Z4},{BIT_Z4},{BIT_Z4}]}}"#),
    );
    let out = run(&["decrement", t.to_str().unwrap(), "--eta", "1/256"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    let mut prev = f64::INFINITY;
    for line in text.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        if let Some(d) = v.get("D").and_then(|d| d.as_f64()) {
            assert!(d <= prev + 1e-9);
            prev = d;
        }
    }
}

#[test]
fn decrement_torsion_mismatch_is_usage_error() {
    let t = write_temp(
        "dec_bad.json",
        &format!(r#"{{"members":[{BIT_Z4},{BIT_Z4}]}}"#),
    );
    let out = run(&["decrement", t.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn malformed_json_is_usage_error_with_position() {
    let t = write_temp("bad.json", "{not json");
    let out = run(&["decrement", t.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(
        err.contains("line") && err.contains("column"),
        "no position in: {err}"
    );
}

#[test]
fn pfr_subgroup_input_gives_single_coset() {
    let s = write_temp(
        "set_h.json",
        r#"{"group":{"orders":[4]},"elements":[[0],[2]]}"#,
    );
    let cover = std::env::temp_dir().join("entropic-pfr-cli-tests/cover_h.json");
    let out = run(&["pfr", s.to_str().unwrap(), "--out", cover.to_str().unwrap()]);
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&cover).unwrap()).unwrap();
    assert_eq!(v["count"], 1);
    assert_eq!(v["K"], "1/1");

    let out = run(&["verify-cover", s.to_str().unwrap(), cover.to_str().unwrap()]);
    assert!(out.status.success());
}

#[test]
fn verify_cover_flags_missing_elements() {
    let s = write_temp(
        "set_ab.json",
        r#"{"group":{"orders":[4]},"elements":[[0],[1]]}"#,
    );
    let c = write_temp(
        "cover_bad.json",
        r#"{"subgroup":[[0],[2]],"translates":[[0]],"K":"3/2","ell":1,"count":1}"#,
    );
    let out = run(&["verify-cover", s.to_str().unwrap(), c.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("\"coverage_ok\": false"));
}

#[test]
fn pfr_above_cap_exits_3() {
    // F2^7 has 128 elements: the endgame joint blows the atom cap long
    // before the subgroup enumeration cap matters.
    let s = write_temp(
        "set_big.json",
        r#"{"group":{"orders":[2,2,2,2,2,2,2]},"elements":[[0,0,0,0,0,0,0],[1,0,0,0,0,0,0],[0,1,0,0,0,0,0]]}"#,
    );
    let out = run(&["pfr", s.to_str().unwrap()]);
    assert_eq!(
        out.status.code(),
        Some(3),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn fuzz_is_deterministic_and_clean() {
    let a = run(&["fuzz", "--trials", "20", "--seed", "99"]);
    let b = run(&["fuzz", "--trials", "20", "--seed", "99"]);
    assert!(a.status.success());
    assert_eq!(
        a.stdout, b.stdout,
        "same seed must give byte-identical reports"
    );
}

#[test]
fn fuzz_selftest_hook_exits_1_with_dump() {
    let out = run(&[
        "fuzz",
        "--trials",
        "1",
        "--seed",
        "1",
        "--registry",
        "selftest.broken",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("selftest.broken"));
    assert!(
        text.contains("\"inputs\""),
        "counterexample dump missing: {text}"
    );
}

#[test]
fn fuzz_invalid_config_exits_2() {
    let out = run(&["fuzz", "--trials", "0"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["fuzz", "--registry", "bogus.name"]);
    assert_eq!(out.status.code(), Some(2));
}
