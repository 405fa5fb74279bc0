use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn lsep(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lsep")).args(args).env_remove("LSEP_OUTPUT_DIR").output().unwrap()
}

fn run_in(sub: &str, cfg: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![sub, "--config", cfg.to_str().unwrap(), "--output-dir", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    lsep(&args)
}

#[test]
fn verify_passing_config_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in("verify", &config("bracket_tvar.toml"), dir.path(), &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("PASS"));
    assert!(!stdout.lines().any(|l| l.starts_with("FAIL")));
    for f in ["report.json", "report.csv", "manifest.json"] {
        assert!(dir.path().join(f).exists(), "{f} missing");
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert!(manifest.get("timestamp_unix").is_some());
}

#[test]
fn negative_control_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in("verify", &config("negative_control_rate.toml"), dir.path(), &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL"));
    assert!(dir.path().join("report.json").exists());
}

#[test]
fn missing_config_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in("verify", &dir.path().join("nope.toml"), dir.path(), &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
}

#[test]
fn malformed_toml_reports_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "seed = 1\nn = [1, 2\n").unwrap();
    let out = run_in("simulate", &cfg, dir.path(), &[]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bad.toml"), "{err}");
    assert!(err.contains("line"), "{err}");
}

#[test]
fn unknown_flag_and_subcommand_exit_two() {
    assert_eq!(lsep(&["verify", "--bogus"]).status.code(), Some(2));
    assert_eq!(lsep(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(lsep(&[]).status.code(), Some(2));
}

#[test]
fn non_contracting_model_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(config("simulate_tvar.toml")).unwrap().replace("a = [0.1, 0.6]", "a = [0.9, 0.6]");
    let cfg = dir.path().join("explosive.toml");
    std::fs::write(&cfg, text).unwrap();
    let out = run_in("simulate", &cfg, dir.path(), &[]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn simulate_writes_path_and_honours_seed_override() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let c = tempfile::tempdir().unwrap();
    let cfg = config("simulate_tvar.toml");
    assert_eq!(run_in("simulate", &cfg, a.path(), &[]).status.code(), Some(0));
    assert_eq!(run_in("simulate", &cfg, b.path(), &[]).status.code(), Some(0));
    assert_eq!(run_in("simulate", &cfg, c.path(), &["--seed", "99"]).status.code(), Some(0));
    let pa = std::fs::read(a.path().join("path.csv")).unwrap();
    assert_eq!(pa, std::fs::read(b.path().join("path.csv")).unwrap());
    assert_ne!(pa, std::fs::read(c.path().join("path.csv")).unwrap());
    let text = String::from_utf8(pa).unwrap();
    assert_eq!(text.lines().count(), 1001);
}

#[test]
fn outputs_do_not_depend_on_thread_count() {
    let one = tempfile::tempdir().unwrap();
    let four = tempfile::tempdir().unwrap();
    let cfg = config("estimate_edf.toml");
    assert_eq!(run_in("estimate", &cfg, one.path(), &["--threads", "1"]).status.code(), Some(0));
    assert_eq!(run_in("estimate", &cfg, four.path(), &["--threads", "4"]).status.code(), Some(0));
    for f in ["estimate.csv", "estimate.json"] {
        assert_eq!(std::fs::read(one.path().join(f)).unwrap(), std::fs::read(four.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn depmeasure_table_has_one_row_per_lag() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in("depmeasure", &config("depmeasure_ar1.toml"), dir.path(), &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("depmeasure.csv")).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("k,delta_hat"));
    assert_eq!(lines.count(), 8);
}

#[test]
fn output_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_lsep"))
        .args(["simulate", "-c", config("simulate_tvar.toml").to_str().unwrap()])
        .env("LSEP_OUTPUT_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(dir.path().join("path.csv").exists());
}
