use serde_json::Value;
use std::path::Path;
use std::process::{Command, Output};

fn tauberlab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tauberlab")).arg("--out-dir").arg(dir).args(args).env_remove("TAUBERLAB_THREADS").output().unwrap()
}

fn summary(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

#[test]
fn atoms_verify_writes_four_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = tauberlab(dir.path(), &["atoms", "verify", "--alpha", "2", "--beta", "2", "--k", "20"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let s = summary(dir.path());
    let ids: Vec<&str> = s["reports"].as_array().unwrap().iter().map(|r| r["id"].as_str().unwrap()).collect();
    assert_eq!(ids, ["X3", "XQ4", "X5", "X6"]);
    assert_eq!(s["scenario"]["command"], "atoms-verify");
    assert_eq!(s["pass"], true);
    let csv = std::fs::read_to_string(dir.path().join("atoms-samples.csv")).unwrap();
    assert!(csv.starts_with("# tauberlab atoms-samples schema v1: "));
}

#[test]
fn unknown_config_key_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.conf");
    std::fs::write(&cfg, "[run]\ncommand = \"atoms-verify\"\n\n[atoms]\nalpah = 2\n").unwrap();
    let out = tauberlab(dir.path(), &["run", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("alpah"));
}

#[test]
fn config_file_runs_like_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("w.conf");
    std::fs::write(&cfg, "# weights from a file\n[run]\ncommand = \"weights\"\nthreads = 1\n\n[weights]\nrate = \"constant:2\"\npoints = 20\nt_max = 500.0\ntail_t_max = 512\n").unwrap();
    let out = tauberlab(dir.path(), &["run", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let s = summary(dir.path());
    assert_eq!(s["scenario"]["parameters"]["rate"], "constant:2");
    assert_eq!(s["scenario"]["parameters"]["points"], 20);
}

#[test]
fn bad_flags_and_env_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(tauberlab(dir.path(), &["atoms", "verify", "--kk", "3"]).status.code(), Some(2));
    assert_eq!(tauberlab(dir.path(), &["weights", "--rate", "cubic:1"]).status.code(), Some(2));
    let out = Command::new(env!("CARGO_BIN_EXE_tauberlab")).args(["--out-dir", dir.path().to_str().unwrap(), "weights"]).env("TAUBERLAB_THREADS", "many").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn csv_bodies_are_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["contour", "--k", "10", "--times", "5,10,20"];
    assert_eq!(tauberlab(a.path(), &args).status.code(), Some(0));
    let out = Command::new(env!("CARGO_BIN_EXE_tauberlab")).arg("--out-dir").arg(b.path()).args(args).env("TAUBERLAB_THREADS", "2").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    for name in ["contour.csv"] {
        assert_eq!(std::fs::read(a.path().join(name)).unwrap(), std::fs::read(b.path().join(name)).unwrap());
    }
}

#[test]
fn failed_invariant_still_writes_summary() {
    let dir = tempfile::tempdir().unwrap();
    // the halving rule has no fourth block in double precision
    let out = tauberlab(dir.path(), &["counterexample", "divergence", "--blocks", "4"]);
    assert_eq!(out.status.code(), Some(1));
    let s = summary(dir.path());
    assert_eq!(s["pass"], false);
    assert!(s["error"].as_str().unwrap().contains("block 4"));
}

#[test]
fn list_suites_names_every_suite() {
    let dir = tempfile::tempdir().unwrap();
    let out = tauberlab(dir.path(), &["list-suites"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("X3") && text.contains("lemma31"));
    assert_eq!(text.lines().count(), tauberlab::suites::registry().len());
}

#[test]
fn wave_sandwich_reports_four_constants() {
    let dir = tempfile::tempdir().unwrap();
    let out = tauberlab(dir.path(), &["wave", "sandwich", "--n", "400", "--damping", "localized"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let s = summary(dir.path());
    for c in ["c", "C", "c'", "C'"] {
        assert!(s["fitted_constants"][format!("rate-sandwich.{c}")].is_number(), "{c}");
    }
    let csv = std::fs::read_to_string(dir.path().join("wave-orbit.csv")).unwrap();
    assert!(csv.lines().count() > 50);
}
