use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_dnsym"));
    c.env_remove("DNSYM_BACKEND");
    c
}

fn scenario(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("report is JSON")
}

#[test]
fn flat_scenario_passes() {
    let out = bin().arg("run").arg(scenario("flat.json")).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["status"], "pass");
    assert_eq!(r["tasks"].as_array().unwrap().len(), 3);
    assert_eq!(r["tasks"][0]["output"]["verdict"]["status"], "pass");
}

#[test]
fn budget_error_names_the_task() {
    let out = bin().arg("run").arg(scenario("budget_error.json")).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let r = report(&out);
    assert_eq!(r["tasks"][0]["status"], "error");
    let msg = r["tasks"][0]["message"].as_str().unwrap();
    assert!(msg.contains("task 0 (factorize)") && msg.contains("budget"), "{msg}");
}

#[test]
fn reports_are_deterministic() {
    let a = bin().arg("run").arg(scenario("dichotomy.json")).output().unwrap();
    let b = bin().arg("run").arg(scenario("dichotomy.json")).output().unwrap();
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let r = report(&a);
    let hash = r["provenance"]["input_sha256"].as_str().unwrap();
    assert_eq!(hash.len(), 64);
}

#[test]
fn parallel_run_matches_sequential() {
    let a = bin().arg("run").arg(scenario("disk.json")).output().unwrap();
    let b = bin().arg("run").arg("--parallel").arg(scenario("disk.json")).output().unwrap();
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn round_trip_scenario_has_zero_residuals() {
    let out = bin().arg("run").arg(scenario("round_trip.json")).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    for t in r["tasks"].as_array().unwrap() {
        assert_eq!(t["status"], "pass");
        for res in t["output"]["residuals"].as_array().unwrap() {
            assert_eq!(res["max_abs"].as_f64(), Some(0.0));
        }
    }
}

#[test]
fn parse_errors_exit_with_two() {
    let dir = std::env::temp_dir().join(format!("dnsym-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join("bad.json");
    std::fs::write(&p, "{\n  \"schema_version\": 1,\n  \"n\": \"three\"\n}\n").unwrap();
    let out = bin().arg("run").arg(&p).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3"), "{err}");
}

#[test]
fn conflicting_prescriptions_are_rejected() {
    let out = bin()
        .args(["reconstruct", "--method", "weight-from-gauge", "--prescribe", "d1V=1", "--prescribe", "d2V=0"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("conflicting"));
}

#[test]
fn unknown_flag_is_an_input_error() {
    let out = bin().args(["factorize", "--no-such-flag"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn second_derivative_prescription_gives_two_branches() {
    let out = bin()
        .args(["reconstruct", "--method", "weight-from-gauge", "--prescribe", "d2V=0"])
        .args(["--weight", r#"[{"m":[1,0,0],"c":"1"}]"#])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    let roots: Vec<&str> = r["tasks"][0]["output"]["branches"]
        .as_array()
        .unwrap()
        .iter()
        .map(|b| b["root"].as_str().unwrap())
        .collect();
    assert_eq!(roots, ["-1", "1"]);
}

#[test]
fn disk_validation_slope() {
    let out = bin().args(["validate-disk", "--modes", "8:64", "--depth", "3"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    let slope = r["tasks"][0]["output"]["slope"].as_f64().unwrap();
    assert!(slope <= -2.7, "{slope}");
    assert_eq!(r["provenance"]["backend"], "float");
}

#[test]
fn backend_from_environment() {
    let out = bin()
        .env("DNSYM_BACKEND", "float")
        .args(["factorize", "--mode", "gauge", "--gauge", "s", "--metric", "random", "--weight", "random", "--depth", "3"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["provenance"]["backend"], "float");
    assert_eq!(r["status"], "pass");
}

#[test]
fn selftest_single_criterion() {
    let out = bin().args(["selftest", "--criterion", "2"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("[PASS] 2."), "{text}");
}
