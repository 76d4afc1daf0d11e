use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use tempfile::TempDir;

fn psreg(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_psreg"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = psreg(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).to_string()
}

/// A small phantom patient in a fresh directory.
fn workspace() -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["phantom", "--out", "pat", "--surface-frequency", "12", "--tet-resolution", "6"]);
    dir
}

fn hashes(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for e in std::fs::read_dir(&dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if p.file_name().unwrap() != "timings.log" {
                out.insert(p.strip_prefix(root).unwrap().to_path_buf(), Sha256::digest(std::fs::read(&p).unwrap()).to_vec());
            }
        }
    }
    out
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn help_lists_commands_and_flags() {
    let dir = tempfile::tempdir().unwrap();
    let top = ok(dir.path(), &["--help"]);
    for cmd in ["generate", "match", "register", "evaluate", "pipeline"] {
        assert!(top.contains(cmd), "{cmd} missing from help");
    }
    let pipeline = ok(dir.path(), &["pipeline", "--help"]);
    for flag in ["--patient", "--seed", "--count", "--out", "--workers", "--provider", "--tau", "--theta", "--young", "--poisson", "--k", "--substeps"] {
        assert!(pipeline.contains(flag), "{flag} missing from pipeline help");
    }
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(psreg(dir.path(), &["generate", "--bogus"]).status.code(), Some(2));
    assert_eq!(psreg(dir.path(), &["match", "--sample", ".", "--provider", "magic"]).status.code(), Some(2));
    assert_eq!(psreg(dir.path(), &["generate", "--out", "x"]).status.code(), Some(2));
}

#[test]
fn generate_is_reproducible() {
    let w = workspace();
    for out in ["a", "b"] {
        ok(w.path(), &["generate", "--patient", "pat/patient.toml", "--seed", "7", "--count", "2", "--out", out]);
    }
    let a = hashes(&w.path().join("a"));
    assert_eq!(a.len(), 10);
    assert_eq!(a, hashes(&w.path().join("b")));
    let log = std::fs::read_to_string(w.path().join("a/timings.log")).unwrap();
    assert_eq!(log.lines().count(), 2);
}

#[test]
fn missing_patient_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let out = psreg(dir.path(), &["generate", "--patient", "nowhere/patient.toml", "--out", "run"]);
    assert_ne!(out.status.code(), Some(0));
    assert!(stderr(&out).contains("nowhere/patient.toml"), "{}", stderr(&out));
}

#[test]
fn features_file_with_oracle_features_matches_well() {
    let w = workspace();
    ok(w.path(), &["generate", "--patient", "pat/patient.toml", "--seed", "3", "--out", "run"]);
    ok(w.path(), &["oracle-features", "--sample", "run/sample_000003", "--out", "feat.bin"]);
    ok(w.path(), &["match", "--sample", "run/sample_000003", "--provider", "features-file", "--features", "feat.bin"]);
    let m = json(&w.path().join("run/sample_000003/match_metrics.json"));
    assert!(m["matching_score"].as_f64().unwrap() > 90.0, "{m}");
    assert!(w.path().join("run/sample_000003/matches.json").is_file());
}

#[test]
fn features_file_without_path_is_config_error() {
    let w = workspace();
    ok(w.path(), &["generate", "--patient", "pat/patient.toml", "--out", "run"]);
    let out = psreg(w.path(), &["match", "--sample", "run/sample_000000", "--provider", "features-file"]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
}

#[test]
fn empty_matches_file_fails_with_data_error() {
    let w = workspace();
    ok(w.path(), &["generate", "--patient", "pat/patient.toml", "--out", "run"]);
    std::fs::write(w.path().join("empty.json"), "[]").unwrap();
    let out = psreg(
        w.path(),
        &["register", "--sample", "run/sample_000000", "--patient", "pat/patient.toml", "--matches-file", "empty.json"],
    );
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("fewer than 1 match"), "{}", stderr(&out));
}

#[test]
fn register_echoes_material() {
    let w = workspace();
    ok(w.path(), &["generate", "--patient", "pat/patient.toml", "--out", "run"]);
    ok(
        w.path(),
        &[
            "register", "--sample", "run/sample_000000", "--patient", "pat/patient.toml", "--matches", "gt", "--young",
            "1500", "--poisson", "0.45",
        ],
    );
    let reg = w.path().join("run/sample_000000/registration");
    let report = json(&reg.join("solve_report.json"));
    assert_eq!(report["material"]["young_modulus"], 1500.0);
    assert_eq!(report["material"]["poisson_ratio"], 0.45);
    for f in ["registered.ply", "displacement.json", "reg_metrics.json"] {
        assert!(reg.join(f).is_file(), "{f}");
    }
}

#[test]
fn bad_material_exits_two() {
    let w = workspace();
    ok(w.path(), &["generate", "--patient", "pat/patient.toml", "--out", "run"]);
    let out = psreg(w.path(), &["register", "--sample", "run/sample_000000", "--patient", "pat/patient.toml", "--poisson", "0.7"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("Poisson"), "{}", stderr(&out));
}

#[test]
fn run_config_file_is_overridden_by_flags() {
    let w = workspace();
    std::fs::write(
        w.path().join("run.toml"),
        "patient = \"pat/patient.toml\"\nout = \"cfgrun\"\ncount = 2\n",
    )
    .unwrap();
    ok(w.path(), &["--config", "run.toml", "generate", "--count", "1"]);
    assert!(w.path().join("cfgrun/sample_000000").is_dir());
    assert!(!w.path().join("cfgrun/sample_000001").exists());

    std::fs::write(w.path().join("bad.toml"), "cuont = 2\n").unwrap();
    let out = psreg(w.path(), &["--config", "bad.toml", "generate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("bad.toml"));
}

#[test]
fn evaluate_single_sample_aggregate_equals_sample() {
    let w = workspace();
    ok(w.path(), &["pipeline", "--patient", "pat/patient.toml", "--provider", "oracle", "--out", "run"]);
    let report = json(&w.path().join("run/report.json"));
    let sample = &report["per_sample"][0]["values"];
    for (key, v) in report["aggregate"].as_object().unwrap() {
        assert_eq!(v["mean"], sample[key], "{key}");
        assert_eq!(v["std"], 0.0);
        assert_eq!(v["count"], 1);
    }
    let table = std::fs::read_to_string(w.path().join("run/report.txt")).unwrap();
    assert!(table.contains("tre_reduction"));
}

#[test]
fn evaluate_flags_incomplete_samples() {
    let w = workspace();
    ok(w.path(), &["generate", "--patient", "pat/patient.toml", "--count", "2", "--out", "run"]);
    ok(w.path(), &["match", "--sample", "run/sample_000000"]);
    let out = psreg(w.path(), &["evaluate", "--run", "run"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("sample_000001"), "{}", stderr(&out));
    let report = json(&w.path().join("run/report.json"));
    assert_eq!(report["incomplete"][0], "sample_000001");
    assert_eq!(report["per_sample"].as_array().unwrap().len(), 1);

    ok(w.path(), &["match", "--sample", "run/sample_000001"]);
    ok(w.path(), &["evaluate", "--run", "run"]);
}

#[test]
fn evaluate_empty_directory_fails() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::create_dir(dir.path().join("run")).unwrap();
    let out = psreg(dir.path(), &["evaluate", "--run", "run"]);
    assert_eq!(out.status.code(), Some(3));
}
