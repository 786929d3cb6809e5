use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn raidrel(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_raidrel"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn small_config(grid: &str, extra: &str) -> String {
    format!(
        r#"{{
  "system": {{ "n": 3, "k": 2 }},
  "distributions": {{
    "ttop": {{ "family": "weibull", "shape": 1.12, "scale": 461386, "offset": 0 }},
    "ttld": {{ "family": "exponential", "mean": 9259 }},
    "ttr": {{ "family": "weibull", "shape": 2, "scale": 12, "offset": 6 }},
    "ttscr": {{ "family": "weibull", "shape": 3, "scale": 168, "offset": 6 }}
  }},
  "fit_plan": {{ "ttop": "three-state", "ttr": {{ "erlang": 3 }}, "ttscr": {{ "erlang": 3 }} }},
  "analysis": {{ "grid_years": {grid}, "epsilon": 1e-8, "group_multiplier": 1000 }},
  "simulation": {{ "reps": 2000, "seed": 5, "clocks": "weibull" }}{extra}
}}"#
    )
}

fn write(dir: &TempDir, name: &str, body: &str) -> PathBuf {
    let path = dir.path().join(name);
    fs::write(&path, body).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn fit_ttop_succeeds() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "c.json", &small_config("[1]", ""));
    let out = raidrel(&["fit", "--config", s(&cfg), "--dist", "ttop"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("alpha"), "{text}");
}

#[test]
fn three_state_repair_fit_needs_opt_in() {
    let dir = TempDir::new().unwrap();
    let body = small_config("[1]", "").replace(r#""ttr": { "erlang": 3 }"#, r#""ttr": "three-state""#);
    let cfg = write(&dir, "c.json", &body);
    let out = raidrel(&["fit", "--config", s(&cfg), "--dist", "ttr"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--allow-repair"));

    let out = raidrel(&["fit", "--config", s(&cfg), "--dist", "ttr", "--allow-repair"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
}

#[test]
fn empty_config_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "empty.json", "");
    let out = raidrel(&["analyze", "--config", s(&cfg)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
}

#[test]
fn unknown_key_is_named() {
    let dir = TempDir::new().unwrap();
    let body = small_config("[1]", r#", "bogus_setting": 1"#);
    let cfg = write(&dir, "c.json", &body);
    let out = raidrel(&["analyze", "--config", s(&cfg)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus_setting"));
}

#[test]
fn analyze_writes_expected_columns() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "c.json", &small_config("[1, 5, 10]", ""));
    let csv = dir.path().join("out.csv");
    let out = raidrel(&["analyze", "--config", s(&cfg), "--out", s(&csv)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("# raidrel "));
    let rows = csv_rows(&text);
    assert_eq!(rows[0], ["t_years", "ddf_analytic", "states", "epsilon", "flags"]);
    assert_eq!(rows.len(), 4);
    let values: Vec<f64> = rows[1..].iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(values.windows(2).all(|w| w[0] < w[1]), "{values:?}");
}

#[test]
fn zero_time_gives_zero_loss() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "c.json", &small_config("[0]", ""));
    let out = raidrel(&["analyze", "--config", s(&cfg)]);
    assert_eq!(out.status.code(), Some(0));
    let rows = csv_rows(&String::from_utf8_lossy(&out.stdout));
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[1][1].parse::<f64>().unwrap(), 0.0);
}

#[test]
fn simulate_is_deterministic_per_seed() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "c.json", &small_config("[2, 10]", ""));
    let run = |seed: &str| {
        let out = raidrel(&["simulate", "--config", s(&cfg), "--seed", seed, "--reps", "3000"]);
        assert_eq!(out.status.code(), Some(0));
        csv_rows(&String::from_utf8_lossy(&out.stdout))
    };
    let a = run("9");
    assert_eq!(a[0], ["t_years", "ddf_sim", "ci_low", "ci_high", "reps", "seed", "flags"]);
    assert_eq!(a, run("9"));
    assert_eq!(a[1][4], "3000");
    assert_eq!(a[1][5], "9");
}

#[test]
fn sweep_shape_one_matches_exponential_model() {
    let dir = TempDir::new().unwrap();
    let sweep = r#", "sweep": { "parameter": "ttop-shape", "values": [0.8, 1.0, 1.5], "t_years": 10, "systems": [[4, 3]] }"#;
    let body = small_config("[10]", sweep);
    let cfg = write(&dir, "c.json", &body);
    let out = raidrel(&["sweep", "--config", s(&cfg), "--allow-repair"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = csv_rows(&String::from_utf8_lossy(&out.stdout));
    assert_eq!(rows[0], ["n", "k", "shape", "dataloss_probability", "states", "flags"]);
    let one = rows.iter().find(|r| r[2] == "1").expect("shape 1 row");
    assert!(one[5].contains("exact-exponential"), "{one:?}");
    assert_eq!(rows.len(), 4);
}
