use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn kssim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kssim"))
        .args(args)
        .output()
        .expect("spawn kssim")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("exp.toml");
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

const EQUILIBRIUM: &str = r#"
grid.dim = 1
grid.cells = [16]
model.p = 1.5
model.theta = 0.5
model.epsilon = 1e-3
init.type = "constant"
init.mass = 0.5
solver.t_end = 1.0
analysis.t1 = 0.5
"#;

#[test]
fn version_prints_package_version() {
    let o = kssim(&["version"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), format!("kssim {}", env!("CARGO_PKG_VERSION")));
}

#[test]
fn check_regime_reports_threshold_and_q_sup() {
    let o = kssim(&["check-regime", "--p", "2.5", "--theta", "1", "--dim", "2"]);
    assert!(o.status.success());
    assert_eq!(
        stdout(&o),
        "regime: Supercritical\nthreshold: 2.0\nq_sup: 2.0 (exclusive)\n"
    );
    let o = kssim(&["check-regime", "--p", "2", "--theta", "0.5", "--dim", "1"]);
    assert_eq!(stdout(&o), "regime: Subcritical\nthreshold: inf\nq_sup: inf (inclusive)\n");
}

#[test]
fn check_regime_rejects_bad_theta() {
    let o = kssim(&["check-regime", "--p", "2", "--theta", "1.5", "--dim", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn run_writes_manifested_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), EQUILIBRIUM);
    let out = tmp.path().join("out");
    let o = kssim(&["run", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary: serde_json::Value = serde_json::from_slice(&fs::read(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["kind"], "single");
    assert_eq!(summary["runs"][0]["status"], "Completed");
    assert!(summary["runs"][0]["gap_sup"].as_f64().unwrap() <= 1e-10);
    let files: Vec<&str> = summary["manifest"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["file"].as_str().unwrap())
        .collect();
    assert_eq!(files, ["config.toml", "run_000.csv"]);
    let mut on_disk: Vec<String> = fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    on_disk.sort();
    assert_eq!(on_disk, ["config.toml", "run_000.csv", "summary.json"]);
}

#[test]
fn config_errors_exit_with_code_two() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &EQUILIBRIUM.replace("model.epsilon = 1e-3", "model.epsilon = 0.0"));
    let o = kssim(&["run", &cfg, "--out", tmp.path().join("out").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("model.epsilon"));

    let cfg = write_config(tmp.path(), "grid.dim = [");
    assert_eq!(kssim(&["run", &cfg]).status.code(), Some(2));

    assert_eq!(kssim(&["run", "/nonexistent/exp.toml"]).status.code(), Some(2));
}

#[test]
fn subcommand_must_match_kind() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), EQUILIBRIUM);
    let o = kssim(&["sweep", &cfg, "--out", tmp.path().join("out").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}
