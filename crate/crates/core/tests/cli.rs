use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn family(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../families").join(name)
}

fn matpress(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_matpress")).args(args).output().expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let mut full = vec!["--format", "json"];
    full.extend_from_slice(args);
    let out = matpress(&full);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("valid json")
}

fn path(name: &str) -> String {
    family(name).to_string_lossy().into_owned()
}

#[test]
fn decompose_reports_lambda() {
    let v = json(&["decompose", &path("diag.json")]);
    assert_eq!(v["summary"]["lambda"], "{1,2}");
    assert_eq!(v["summary"]["trivial"], false);

    let v = json(&["decompose", &path("nilpotent.json")]);
    assert_eq!(v["summary"]["lambda"], "∅");
    assert_eq!(v["summary"]["trivial"], true);
}

#[test]
fn block_pressure_is_exact_for_diagonal_pair() {
    let v = json(&["pressure", &path("diag.json"), "--blocks", "--q", "0.5,1,2"]);
    let rows = v["rows"].as_array().unwrap();
    let expected = [(2.0 * 2f64.sqrt()).ln(), 4f64.ln(), 10f64.ln()];
    for (row, want) in rows.iter().zip(expected) {
        let lo = row["lower"].as_f64().unwrap();
        let hi = row["upper"].as_f64().unwrap();
        assert!((lo - want).abs() < 1e-12 && (hi - want).abs() < 1e-12);
    }
    assert_eq!(rows[1]["achiever_blocks"], "{1,2}");
    let single = rows[2]["achiever_blocks"].as_str().unwrap();
    assert!(single == "{1}" || single == "{2}", "{single}");
}

#[test]
fn trivial_family_reports_minus_infinity() {
    let out = matpress(&["pressure", &path("nilpotent.json"), "--q", "1"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("-inf"), "{text}");
}

#[test]
fn csv_output_is_deterministic() {
    let args = ["pressure", &path("shear.json"), "--q", "1,2", "--depth", "10", "--spectral-check"];
    let a = matpress(&args);
    let b = matpress(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    let table: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert!(table[0].starts_with("q,"));
    assert_eq!(table.len(), 3);
}

#[test]
fn monte_carlo_lyapunov_is_seeded() {
    let args = ["--seed", "7", "lyapunov", &path("shear.json"), "--measure", "bernoulli:0.5,0.5", "--samples", "2000"];
    assert_eq!(matpress(&args).stdout, matpress(&args).stdout);
}

#[test]
fn lyapunov_flags_non_ergodic_mixture() {
    let v = json(&["lyapunov", &path("diag.json"), "--measure", "mix:0.5*dirac:1+0.5*dirac:2"]);
    let m = v["summary"]["m_star"].as_f64().unwrap();
    assert!((m - 0.5 * 6f64.ln()).abs() < 1e-12);
    assert_eq!(v["summary"]["ergodic"], false);
}

#[test]
fn gibbs_ratios_are_one_for_scalars() {
    let v = json(&["gibbs", &path("scalars.json"), "--q", "1", "--depth", "8", "--level", "2"]);
    let lo = v["summary"]["ratio_min"].as_f64().unwrap();
    let hi = v["summary"]["ratio_max"].as_f64().unwrap();
    assert!((lo - 1.0).abs() < 1e-10 && (hi - 1.0).abs() < 1e-10);
    let total: f64 = v["rows"].as_array().unwrap().iter().map(|r| r["mass"].as_f64().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-12);
}

#[test]
fn affinity_brackets_log3_over_log2() {
    let v = json(&["affinity", &path("halves3.json")]);
    let exact = 3f64.ln() / 2f64.ln();
    let lo = v["summary"]["s_low"].as_f64().unwrap();
    let hi = v["summary"]["s_high"].as_f64().unwrap();
    assert!(lo <= exact + 1e-9 && exact <= hi + 1e-9 && hi - lo <= 1e-6);
}

#[test]
fn emitted_blocks_load_back() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_string_lossy().into_owned();
    let out = matpress(&["decompose", &path("diag.json"), "--emit-blocks", &d]);
    assert!(out.status.success());
    for j in 1..=2 {
        let block = dir.path().join(format!("block_{j}.json"));
        let v = json(&["pressure", &block.to_string_lossy(), "--q", "1", "--depth", "4"]);
        let row = &v["rows"][0];
        assert_eq!(row["lower"], row["upper"]);
        assert!((row["upper"].as_f64().unwrap() - 4f64.ln()).abs() < 1e-12);
    }
}

#[test]
fn report_written_to_out_file() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("report.json");
    let f = file.to_string_lossy().into_owned();
    let out = matpress(&["--format", "json", "--out", &f, "svf-pressure", &path("halves3.json"), "--q", "1"]);
    assert!(out.status.success());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&file).unwrap()).unwrap();
    assert_eq!(v["command"], "svf-pressure");
}

#[test]
fn exit_codes() {
    assert_eq!(matpress(&["pressure", &path("missing.json")]).status.code(), Some(2));
    assert_eq!(matpress(&["affinity", &path("diag.json")]).status.code(), Some(2));
    assert_eq!(matpress(&["--budget", "100", "--depth", "12", "pressure", &path("shear.json")]).status.code(), Some(4));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"format-version": 1, "field": "real", "dimension": 2, "matrices": [[[1, 0]]]}"#).unwrap();
    assert_eq!(matpress(&["decompose", &bad.to_string_lossy()]).status.code(), Some(2));
    let unknown = dir.path().join("unknown.json");
    std::fs::write(&unknown, r#"{"format-version": 1, "field": "real", "dimension": 1, "matrices": [[[1]]], "extra": 0}"#).unwrap();
    assert_eq!(matpress(&["decompose", &unknown.to_string_lossy()]).status.code(), Some(2));
}
