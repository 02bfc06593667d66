use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn sigma3(cache: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sigma3"))
        .args(args)
        .env("SIGMA3_CACHE_DIR", cache)
        .output()
        .expect("run sigma3")
}

fn stock(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("curves").join(name).display().to_string()
}

fn text(b: &[u8]) -> String {
    String::from_utf8_lossy(b).into_owned()
}

#[test]
fn periods_writes_file_and_reports_riemann_diagnostics() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("p.json");
    let o = sigma3(dir.path(), &["periods", "--curve", &stock("x7p1.json"), "-o", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o.stderr));
    assert!(text(&o.stdout).contains("Z symmetry residual"));
    let pd: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert!(pd.get("omega1").is_some() && pd.get("Z").is_some());
}

#[test]
fn bad_curve_files_exit_with_status_two() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"lambda\": [1, 2").unwrap();
    let o = sigma3(dir.path(), &["periods", "--curve", bad.to_str().unwrap(), "-o", "/dev/null"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(text(&o.stderr).contains("malformed"));

    // f = x^7 has a sevenfold root at 0
    let double = dir.path().join("double.json");
    std::fs::write(&double, "{\"lambda\": [[0,0],[0,0],[0,0],[0,0],[0,0],[0,0],[0,0]]}").unwrap();
    let o = sigma3(dir.path(), &["periods", "--curve", double.to_str().unwrap(), "-o", "/dev/null"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(text(&o.stderr).contains("repeated roots"));
}

#[test]
fn symbolic_psi_matches_golden_for_both_derivations() {
    let dir = TempDir::new().unwrap();
    let golden = std::fs::read_to_string(
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/golden/psi4_real7.txt"),
    )
    .unwrap();
    for j in ["1", "3"] {
        let o = sigma3(dir.path(), &["psi", "--curve", &stock("real7.json"), "--n", "4", "--j", j, "--symbolic"]);
        assert_eq!(o.status.code(), Some(0));
        assert_eq!(text(&o.stdout), golden, "j = {j}");
    }
}

#[test]
fn symbolic_psi_needs_n_above_three() {
    let dir = TempDir::new().unwrap();
    let o = sigma3(dir.path(), &["psi", "--n", "3", "--symbolic"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(text(&o.stderr).contains("requires n > 3"));
}

#[test]
fn numeric_psi_two_vanishes_with_warning() {
    let dir = TempDir::new().unwrap();
    let o = sigma3(dir.path(), &["psi", "--n", "2", "--numeric", "--points", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o.stderr));
    assert!(text(&o.stderr).contains("warning"));
    let rows: Vec<Value> = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(rows.len(), 3);
    for r in rows {
        let v = &r["psi_sigma_quotient"];
        let norm = v[0].as_f64().unwrap().hypot(v[1].as_f64().unwrap());
        assert!(norm < 1e-8, "psi_2 = {v}");
    }
}

#[test]
fn eval_aj_round_trips_through_sigma() {
    let dir = TempDir::new().unwrap();
    let o = sigma3(dir.path(), &["eval", "aj", "--at", "1.5,0.2,1", "--at", "-0.7,1.1,-1"]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o.stderr));
    let rows: Vec<Value> = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(rows.len(), 2);
    // x(u) = -sigma_1(u) / sigma_2(u)
    let u = &rows[0]["u"];
    let at: Vec<String> = (0..3).flat_map(|k| [u[k][0].to_string(), u[k][1].to_string()]).collect();
    let at = at.join(",");
    let s1 = sigma3(dir.path(), &["eval", "sigma", "--at", &at, "--indices", "1"]);
    let s2 = sigma3(dir.path(), &["eval", "sigma", "--at", &at, "--indices", "2"]);
    let value = |o: &Output| {
        let v: Vec<Value> = serde_json::from_slice(&o.stdout).unwrap();
        (v[0]["value"][0].as_f64().unwrap(), v[0]["value"][1].as_f64().unwrap())
    };
    let (a, b) = (value(&s1), value(&s2));
    let den = b.0 * b.0 + b.1 * b.1;
    let x = (-(a.0 * b.0 + a.1 * b.1) / den, -(a.1 * b.0 - a.0 * b.1) / den);
    assert!((x.0 - 1.5).abs() < 1e-8 && (x.1 - 0.2).abs() < 1e-8, "x(u) = {x:?}");
}

#[test]
fn verify_is_reproducible_and_exit_status_follows_report() {
    let dir = TempDir::new().unwrap();
    let mut reports = Vec::new();
    for k in 0..2 {
        let path = dir.path().join(format!("r{k}.json"));
        let o = sigma3(dir.path(), &["verify", "--trials", "2", "--seed", "7", "--report", path.to_str().unwrap()]);
        let mut rep: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        let all_pass = rep["all_pass"].as_bool().unwrap();
        assert_eq!(o.status.code(), Some(if all_pass { 0 } else { 1 }));
        rep.as_object_mut().unwrap().remove("runtime_sec");
        reports.push(rep);
    }
    // the first run computes the periods, the second reads them from the cache
    assert_eq!(reports[0], reports[1]);
}
