use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const TINY: &str = r#"
[scenario]
n_tx = 4
n_rx = 2
n_paths = 2
q_elev = 2
q_azim = 2
region_wavelengths = 2

[experiment]
kind = "sjnr"
sweep = [-30, -10]
num_seeds = 2
methods = ["fpa", "rpa"]
eval_grid = 3
"#;

fn run(dir: &Path, config: &str, extra: &[&str]) -> Output {
    let cfg = dir.join("config.toml");
    fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_fas-antijam"))
        .arg("run")
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .args(extra)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

#[test]
fn writes_results_summary_and_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), TINY, &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("out/results.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "experiment,method,sweep_value,seed,iteration,sum_rate_wc,rate_u1,rate_u2,rate_u3,qos_ok,relax_level,wall_ms,status"
    );
    assert_eq!(lines.count(), 2 * 2 * 2);
    let summary = fs::read_to_string(dir.path().join("out/summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 1 + 2 * 2);
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/metadata.json")).unwrap()).unwrap();
    assert_eq!(meta["experiment"]["eval_grid"], 3);
}

#[test]
fn same_config_same_bytes() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert!(run(a.path(), TINY, &["--seed", "11"]).status.success());
    assert!(run(b.path(), TINY, &["--seed", "11"]).status.success());
    for f in ["results.csv", "summary.csv", "metadata.json"] {
        assert_eq!(
            fs::read(a.path().join("out").join(f)).unwrap(),
            fs::read(b.path().join("out").join(f)).unwrap(),
            "{f}"
        );
    }
    let c = tempfile::tempdir().unwrap();
    assert!(run(c.path(), TINY, &["--seed", "12"]).status.success());
    assert_ne!(
        fs::read(a.path().join("out/results.csv")).unwrap(),
        fs::read(c.path().join("out/results.csv")).unwrap()
    );
}

#[test]
fn flags_override_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), TINY, &["--experiment", "convergence", "--methods", "fpa", "--num-seeds", "1"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("out/results.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert!(rows.len() > 1);
    assert!(rows.iter().all(|r| r.starts_with("convergence,fpa,-20,0,")));
}

#[test]
fn invalid_config_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), "[scenario]\nmin_spacing = 5.0\n", &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("min_spacing"));
}

#[test]
fn failed_runs_give_nonzero_exit() {
    let dir = tempfile::tempdir().unwrap();
    // Nine antennas fill the 3 x 3 grid of a 1λ region; random placement
    // gives up.
    let cfg = TINY.replace("n_tx = 4", "n_tx = 9").replace("region_wavelengths = 2", "region_wavelengths = 1");
    let out = run(dir.path(), &cfg, &[]);
    assert_eq!(out.status.code(), Some(1));
    let csv = fs::read_to_string(dir.path().join("out/results.csv")).unwrap();
    assert!(csv.lines().any(|l| l.starts_with("sjnr,rpa,") && l.contains(",error: ")));
    assert!(csv.lines().any(|l| l.starts_with("sjnr,fpa,") && l.ends_with(",ok")));
}
