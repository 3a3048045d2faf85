use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use rmtk::laws::{Law, MpLaw};
use serde_json::Value;

fn rmtk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rmtk")).args(args).output().expect("binary runs")
}

fn rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

fn manifest(out: &Path) -> Value {
    let p = format!("{}.manifest.json", out.display());
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn law_pdf_matches_library() {
    let o = rmtk(&["law-pdf", "--law", "mp", "--c", "0.5", "--grid", "0:3:600"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().next(), Some("x,density"));
    let r = rows(&text);
    assert_eq!(r.len(), 600);
    let law = MpLaw::new(0.5, 1.0).unwrap();
    for row in &r {
        let x: f64 = row[0].parse().unwrap();
        let d: f64 = row[1].parse().unwrap();
        assert!((d - law.pdf(x)).abs() < 1e-12, "x = {x}");
    }
    // the manifest goes to stderr when writing to stdout
    let m: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(m["command"], "law-pdf");
}

#[test]
fn fig2_overlay_agrees() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fig2.csv");
    let o = rmtk(&["fig", "2", "--seed", "7", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = rows(&fs::read_to_string(&out).unwrap());
    assert_eq!(r.len(), 60);
    let ks = manifest(&out)["metrics"]["ks"].as_f64().unwrap();
    assert!(ks < 0.03, "ks = {ks}");
}

#[test]
fn roc_pfa_is_monotone() {
    let o = rmtk(&["sense-roc", "--detector", "cnd", "--N", "20", "--n", "400", "--snr", "-8", "--trials", "2000"]);
    assert!(o.status.success());
    let r = rows(&String::from_utf8(o.stdout).unwrap());
    let pfa: Vec<f64> = r.iter().map(|row| row[0].parse().unwrap()).collect();
    assert!(pfa.len() > 10);
    assert!(pfa.windows(2).all(|w| w[1] >= w[0]));
}

#[test]
fn json_records() {
    let o = rmtk(&["tw-quantile", "--p", "0.5", "--order", "2", "--format", "json"]);
    assert!(o.status.success());
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    let q = v[0]["quantile"].as_f64().unwrap();
    assert!((q + 1.8049).abs() < 1e-3, "{q}");
}

#[test]
fn exit_codes() {
    assert_eq!(rmtk(&["law-pdf", "--bogus"]).status.code(), Some(2));
    assert_eq!(rmtk(&["law-pdf", "--law", "mp", "--c", "-1"]).status.code(), Some(3));
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "").unwrap();
    let out = blocker.join("x.csv");
    assert_eq!(rmtk(&["law-pdf", "--law", "mp", "--out", out.to_str().unwrap()]).status.code(), Some(4));
    // a figure check that cannot pass under an absurd tolerance
    assert_eq!(rmtk(&["fig", "2", "--size", "200", "--tol", "1e-9"]).status.code(), Some(1));
    assert_eq!(rmtk(&["--version"]).status.code(), Some(0));
}

#[test]
fn config_fills_missing_flags_only() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"law": "mp", "c": 0.25, "grid": "0:1:5"}"#).unwrap();
    let o = rmtk(&["law-pdf", "--c", "0.5", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = rows(&String::from_utf8(o.stdout).unwrap());
    assert_eq!(r.len(), 5);
    let m: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(m["params"]["c"], 0.5);
    assert_eq!(m["params"]["law"], "mp");
}

#[test]
fn manifest_replay_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("a.csv");
    let second = dir.path().join("b.csv");
    let o = rmtk(&["ensemble-esd", "--ensemble", "wishart", "--N", "100", "--n", "300", "--seed", "11", "--out", first.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let man = format!("{}.manifest.json", first.display());
    let o = rmtk(&["ensemble-esd", "--config", &man, "--out", second.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read(&first).unwrap(), fs::read(&second).unwrap());
    // replaying under another subcommand is refused
    assert_eq!(rmtk(&["law-pdf", "--config", &man]).status.code(), Some(2));
}

#[test]
fn selftest_single_criterion() {
    let o = rmtk(&["selftest", "--only", "1"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = rows(&String::from_utf8(o.stdout).unwrap());
    assert_eq!(r.len(), 1);
    assert_eq!(r[0][0], "1");
}
