//! End-to-end runs of the `wpsim` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use wpsim_cli::Manifest;

fn wpsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wpsim")).args(args).env_remove("WPSIM_OUT_DIR").output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn manifest(dir: &Path) -> Manifest {
    serde_json::from_slice(&fs::read(dir.join("manifest.json")).unwrap()).unwrap()
}

const SMALL: [&str; 8] = ["--seed", "3", "--M", "2", "--test-games", "100", "--zeta", "8"];

#[test]
fn validate_accepts_defaults() {
    let o = wpsim(&["validate", "--kind", "bootstrap-coverage", "--seed", "1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("valid"));
}

#[test]
fn validate_names_the_offending_field() {
    let o = wpsim(&["validate", "--kind", "bias-variance-vs-K", "--seed", "1", "--K", "1,57"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("error: K: K=57"), "{}", stderr(&o));

    let o = wpsim(&["validate", "--kind", "bootstrap-coverage", "--seed", "1", "--phi", "0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("phi: fraction must be in (0,1]"), "{}", stderr(&o));

    let o = wpsim(&["validate", "--kind", "oracle-export"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("seed: master seed is required"), "{}", stderr(&o));
}

#[test]
fn config_file_errors_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.toml");
    fs::write(&path, "kind = \"bias-variance-vs-zeta\"\nseed = 1\nzeta = []\n").unwrap();
    let o = wpsim(&["validate", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("zeta: grid must not be empty"), "{}", stderr(&o));

    fs::write(&path, "seed = 1\nkind = \"oracle-export\"\nzetta = [4]\n").unwrap();
    let o = wpsim(&["validate", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let e = stderr(&o);
    assert!(e.contains("zetta") && e.contains("line 3"), "{e}");
}

#[test]
fn oracle_export_layout() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = wpsim(&["run", "--kind", "oracle-export", "--seed", "1", "--T", "6", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(out.join("wp_table.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,x,s,wp"));
    assert_eq!(lines.count(), 7 * 3 * 13);
    let m = manifest(&out);
    assert_eq!(m.files.len(), 1);
    assert_eq!(m.files[0].name, "wp_table.csv");
    assert_eq!(m.seed, 1);
    assert!(!text.contains("NaN"));
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_wpsim"))
        .args(["run", "--kind", "oracle-export", "--seed", "1", "--T", "4"])
        .env("WPSIM_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(dir.path().join("wp_table.csv").exists());
}

#[test]
fn expensive_campaigns_need_full_scale() {
    let dir = tempfile::tempdir().unwrap();
    let o = wpsim(&["run", "--kind", "bias-variance-vs-K", "--seed", "1", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--full-scale"), "{}", stderr(&o));
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn failed_publish_leaves_no_partial_outputs() {
    let dir = tempfile::tempdir().unwrap();
    // A directory in the way of the output file makes the final move fail.
    fs::create_dir_all(dir.path().join("wp_table.csv/blocker")).unwrap();
    let o = wpsim(&["run", "--kind", "oracle-export", "--seed", "1", "--T", "4", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    let left: Vec<String> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n != "cache")
        .collect();
    assert_eq!(left, vec!["wp_table.csv".to_string()]);
}

#[test]
fn bias_variance_vs_keep_small_run() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["run", "--kind", "bias-variance-vs-K", "--K", "1,56", "--out", dir.path().to_str().unwrap()];
    args.extend(SMALL);
    let o = wpsim(&args);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("bias_var_vs_K.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "zeta,K,G,bias2_mean,bias2_se,var_mean,var_se,rmse_mean,rmse_se");
    assert!(lines[1].starts_with("8,1,448,"), "{}", lines[1]);
    assert!(lines[2].starts_with("8,56,8,"), "{}", lines[2]);
    assert!(fs::read_dir(dir.path().join("cache")).unwrap().count() >= 2);

    // Rerun hits the cache and reproduces the same bytes and config hash.
    let first = manifest(dir.path());
    let o = wpsim(&args);
    assert!(o.status.success());
    assert_eq!(manifest(dir.path()), first);

    let mut other = args.clone();
    let seed_at = other.iter().position(|a| *a == "--seed").unwrap();
    other[seed_at + 1] = "4";
    let dir2 = tempfile::tempdir().unwrap();
    let n = other.iter().position(|a| *a == "--out").unwrap();
    other[n + 1] = dir2.path().to_str().unwrap();
    assert!(wpsim(&other).status.success());
    assert_ne!(manifest(dir2.path()).config_hash, first.config_hash);
}

#[test]
fn ess_campaign_reports_every_point() {
    let dir = tempfile::tempdir().unwrap();
    let o = wpsim(&[
        "run",
        "--kind",
        "ess",
        "--seed",
        "5",
        "--M",
        "2",
        "--test-games",
        "200",
        "--zeta",
        "4,8,16,32",
        "--ess-at",
        "4,8,16,32,1000000",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("ess_curve.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "zeta,zeta_prime,ratio,status");
    assert_eq!(lines.len(), 6);
    for l in &lines[1..] {
        let status = l.rsplit(',').next().unwrap();
        assert!(["ok", "extrapolation", "exceeds-nominal"].contains(&status), "{l}");
    }
    assert_eq!(lines[5], "1000000,,,extrapolation");
    assert!(stderr(&o).contains("warning"));
    for f in ["ess_fits.json", "bias_var_vs_zeta.csv", "reports.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
}

#[test]
fn bias_by_state_grid() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["run", "--kind", "bias-by-state", "--T", "10", "--scores=-1,0,1", "--out", dir.path().to_str().unwrap()];
    args.extend(SMALL);
    let o = wpsim(&args);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("bias_by_state.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t,s,x,bias_mean,bias_se");
    assert_eq!(lines.len(), 1 + 10 * 3);
    assert!(lines[1].starts_with("1,-1,2,"));
}
