use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = r#"
seed = 5
methods = ["MC", "MLMC", "MLMC-MLCV"]
budgets = [100, 300]
replicates = 3
[surrogates]
doe_sizes = [80, 40, 20, 10]
p_max = 4
subset_pool = 50
anneal_iterations = 200
test_size = 200
[tables]
correlation_samples = 200
level_samples = 200
"#;

fn mlcv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mlcv")).args(args).output().unwrap()
}

fn stderr_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stderr).unwrap_or_else(|_| panic!("not JSON: {}", String::from_utf8_lossy(&out.stderr)))
}

fn write_config(dir: &Path) -> String {
    let path = dir.join("small.toml");
    std::fs::write(&path, SMALL).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn help_and_version_succeed() {
    assert!(mlcv(&["--help"]).status.success());
    assert!(mlcv(&["--version"]).status.success());
}

#[test]
fn usage_errors_are_json() {
    let out = mlcv(&["estimate"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"], "usage");
    let out = mlcv(&["estimate", "x.toml", "--method", "NOPE", "--budget", "10"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"], "usage");
}

#[test]
fn bad_config_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "budgets = [300, 100]").unwrap();
    let out = mlcv(&["campaign", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_json(&out);
    assert!(err["message"].as_str().unwrap().contains("ascending"));
    let out = mlcv(&["campaign", dir.path().join("missing.toml").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    stderr_json(&out);
}

#[test]
fn estimate_reports_a_run_and_rejects_small_budgets() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let suite = dir.path().join("suite.json");
    let suite = suite.to_str().unwrap();
    let out = mlcv(&["estimate", &cfg, "--suite", suite, "--method", "mlmc-mlcv", "--budget", "300"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["method"], "MLMC-MLCV");
    assert!(report["consumed"].as_f64().unwrap() > 300.0);
    assert!(Path::new(suite).exists());
    let again = mlcv(&["estimate", &cfg, "--suite", suite, "--method", "MLMC-MLCV", "--budget", "300"]);
    assert_eq!(out.stdout, again.stdout);
    let out = mlcv(&["estimate", &cfg, "--suite", suite, "--method", "MLMC", "--budget", "10"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"], "budget_too_small");
}

#[test]
fn campaign_then_allocation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let out_dir = dir.path().join("out");
    let out = mlcv(&["--threads", "1", "campaign", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("MLMC-MLCV"));
    let csv = std::fs::read_to_string(out_dir.join("campaign.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 3 * 2);
    let out = mlcv(&["allocation", out_dir.join("runs.json").to_str().unwrap()]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("method,budget,level"));
    assert_eq!(text.lines().count(), 1 + 2 + 2 * 4 + 2 * 4);
}

#[test]
fn tables_write_csv_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let out_dir = dir.path().join("tables");
    let out = mlcv(&["tables", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out_dir.join("correlations.csv").exists());
    assert!(out_dir.join("levels.csv").exists());
}
