use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn clarklab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_clarklab")).args(args).output().expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("cli");
    fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn random_then_verify() {
    let inst = scratch("random.json");
    let out = clarklab(&["random", "--degree", "3", "--kind", "clark_weight", "--seed", "5", "--out", s(&inst)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = clarklab(&["verify", "--instance", s(&inst), "--n-sweep", "400"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["pass"], true);
    assert!(report["checks"].as_array().unwrap().len() > 10);
}

#[test]
fn clark_and_back() {
    let theta = scratch("theta.json");
    fs::write(
        &theta,
        r#"{"front_constant_arg_over_2pi": 0.0, "zeros": [{"re": 0.0, "im": 0.0}, {"re": 0.5, "im": 0.0}]}"#,
    )
    .unwrap();
    let mu = scratch("mu.json");
    let out = clarklab(&["clark", "--theta", s(&theta), "--c", "0", "--out", s(&mu)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = clarklab(&["from-measure", "--mu", s(&mu)]);
    assert!(out.status.success());
    let back: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let zeros = back["zeros"].as_array().unwrap();
    assert_eq!(zeros.len(), 2);
    let re: Vec<f64> = zeros.iter().map(|z| z["re"].as_f64().unwrap()).collect();
    assert!(re.iter().any(|r| (r - 0.5).abs() < 1e-8) && re.iter().any(|r| r.abs() < 1e-8));
}

#[test]
fn examples_and_sweep() {
    let inst = scratch("crofoot.json");
    let out = clarklab(&["example", "crofoot", "--z-power", "3", "--lambda-re", "0.5", "--out", s(&inst)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = scratch("sweep.csv");
    let out = clarklab(&["sweep", "--operator", s(&inst), "--n", "100", "--csv", s(&csv)]);
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(report["m_plus"].as_f64().unwrap() > 1.0);
    assert_eq!(fs::read_to_string(&csv).unwrap().lines().count(), 102);

    let out = clarklab(&["example", "clark-weight", "--z-power", "2", "--c", "0.25", "--phi", "1,0", "--phi", "-2,1"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn malformed_input_exits_2() {
    let bad = scratch("bad.json");
    fs::write(&bad, "{\"kind\": ").unwrap();
    let out = clarklab(&["verify", "--instance", s(&bad)]);
    assert_eq!(out.status.code(), Some(2));
    let out = clarklab(&["random", "--degree", "2", "--kind", "circle", "--seed", "0"]);
    assert_eq!(out.status.code(), Some(2));
    let out = clarklab(&["example", "clark-weight", "--z-power", "2", "--c", "0.25", "--phi", "1,x", "--phi", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unmet_expectation_exits_1() {
    let manifest = scratch("expect_fail.json");
    fs::write(&manifest, r#"{"entries": [{"kind": "crofoot", "degree": 2, "seed": 1, "expect_pass": false}]}"#).unwrap();
    let out = clarklab(&["verify", "--manifest", s(&manifest), "--suite", "core"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("crofoot:2:1"));
}

#[test]
fn parallel_manifest_matches_serial() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../manifests/suite.json");
    let serial = clarklab(&["verify", "--manifest", s(&manifest), "--suite", "core"]);
    let parallel = clarklab(&["verify", "--manifest", s(&manifest), "--suite", "core", "--jobs", "4"]);
    assert!(serial.status.success());
    assert_eq!(serial.stdout, parallel.stdout);
}
