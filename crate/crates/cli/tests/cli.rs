use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_toricfrob")).args(args).output().expect("spawn toricfrob")
}

fn report(args: &[&str]) -> (i32, Value) {
    let out = run(args);
    let code = out.status.code().unwrap();
    let json = serde_json::from_slice(&out.stdout)
        .unwrap_or_else(|e| panic!("{args:?}: {e}\n{}", String::from_utf8_lossy(&out.stderr)));
    (code, json)
}

#[test]
fn frobenius_reports_twelve_classes_on_the_maximal_threefold() {
    let (code, r) = report(&["frobenius", "fano3-18"]);
    assert_eq!(code, 0);
    assert_eq!(r["result"]["count"], 12);
    assert_eq!(r["result"]["stabilized"], true);
    assert_eq!(r["tool_version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(r["input_hash"].as_str().unwrap().len(), 64);
    assert!(r.get("timing_ms").is_none());
}

#[test]
fn fixed_m_reports_full_multiset() {
    let (code, r) = report(&["frobenius", "p2", "--m", "3", "--w", "-1,0,0"]);
    assert_eq!(code, 0);
    assert_eq!(r["result"]["total_multiplicity"], 9);
    assert_eq!(r["result"]["stabilized"], false);
}

#[test]
fn collection_finds_the_unique_subset() {
    let (code, r) = report(&["collection", "fano3-11"]);
    assert_eq!(code, 0);
    assert_eq!(r["result"]["report"]["strong"], false);
    let subsets = r["result"]["strong_subsets"].as_array().unwrap();
    assert_eq!(subsets.len(), 1);
    let subset = subsets[0].as_array().unwrap();
    assert_eq!(subset.len(), 8);
    assert!(!subset.iter().any(|c| c == "-D4-D5+D6"));
}

#[test]
fn fullness_and_flop_pass() {
    let (code, r) = report(&["fullness", "y3"]);
    assert_eq!(code, 0);
    assert_eq!(r["result"]["certificate"]["status"], "certified");
    let (code, r) = report(&["flop-check"]);
    assert_eq!(code, 0);
    assert_eq!(r["result"]["equal"], true);
    assert_eq!(r["result"]["same_cones"], false);
}

#[test]
fn pushforward_check_exit_codes() {
    let (code, r) = report(&["pushforward-check", "fano3-11", "fano3-4"]);
    assert_eq!(code, 0);
    assert!(!r["result"]["blowdowns"].as_array().unwrap().is_empty());
    assert_eq!(run(&["pushforward-check", "p2", "p3"]).status.code(), Some(1));
}

#[test]
fn input_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let garbage = dir.path().join("garbage.json");
    std::fs::write(&garbage, "not json").unwrap();
    assert_eq!(run(&["validate", garbage.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(run(&["validate", "no-such-variety"]).status.code(), Some(2));
    assert_eq!(run(&["cohomology", "p2", "--d", "1,2"]).status.code(), Some(2));
    assert_eq!(run(&["frobenius", "p2", "--m", "zero"]).status.code(), Some(2));
    assert_eq!(run(&["no-such-command"]).status.code(), Some(2));
}

#[test]
fn validate_reports_bad_fans_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("p2.json");
    let out = run(&["atlas", "export", "p2", "--out", good.to_str().unwrap()]);
    assert!(out.status.success());
    let (code, r) = report(&["validate", good.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(r["result"]["report"]["smooth"], true);

    let missing_cone = dir.path().join("bad.json");
    std::fs::write(&missing_cone, r#"{"dim":2,"rays":[[1,0],[0,1],[-1,-1]],"max_cones":[[0,1],[1,2]]}"#).unwrap();
    let (code, r) = report(&["validate", missing_cone.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert_eq!(r["result"]["report"]["complete"], false);
}

#[test]
fn output_is_independent_of_threads() {
    for args in [["frobenius", "fano3-18"], ["collection", "fano3-4"]] {
        let one = run(&[&args[..], &["--threads", "1"]].concat());
        let four = run(&[&args[..], &["--threads", "4"]].concat());
        assert_eq!(one.stdout, four.stdout);
        assert_eq!(one.stdout, run(&args).stdout);
    }
}

#[test]
fn timing_is_opt_in() {
    let (_, r) = report(&["cohomology", "p2", "--d", "0,0,-3", "--timing"]);
    assert!(r["timing_ms"].as_f64().is_some());
    assert_eq!(r["result"]["h"], serde_json::json!([0, 0, 1]));
}

#[test]
fn tsv_tables() {
    let out = run(&["atlas", "list", "--tsv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("id\tdim\trho\tmax_cones\tfano\n"));
    assert!(text.lines().any(|l| l.starts_with("fano3-18\t3\t5\t12\ttrue")));

    let out = run(&["walls", "hirzebruch-2", "--tsv"]);
    assert!(String::from_utf8(out.stdout).unwrap().starts_with("ridge\t"));

    let out = run(&["enumerate-fano3", "--tsv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 1 + 34);
}

#[test]
fn stabilization_cap_comes_from_the_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_toricfrob"))
        .args(["frobenius", "y3"])
        .env("TORICFROB_MMAX", "6")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("did not stabilize"));
}
