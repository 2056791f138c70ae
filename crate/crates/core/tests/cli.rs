use std::path::Path;
use std::process::{Command, Output};

use spurion::montecarlo::{generate_random_walk, GaussianStream, RandomWalkSpec};

fn spurion(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spurion"))
        .args(args)
        .env_remove("SPURION_DATA_DIR")
        .output()
        .unwrap()
}

fn write_csv(dir: &Path, label: &str, start: i64, values: &[f64]) {
    let mut text = String::from("year,value\n");
    for (i, v) in values.iter().enumerate() {
        text.push_str(&format!("{},{}\n", start + i as i64, v));
    }
    std::fs::write(dir.join(format!("{label}.csv")), text).unwrap();
}

fn fixture() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    let x = generate_random_walk(&RandomWalkSpec { len: 100, mu: 0.02, sigma: 0.03, y0: 8.0, seed: 11 });
    let mut g = GaussianStream::new(12);
    let y: Vec<f64> = x.values().iter().map(|v| 0.5 * v - 0.4 + 0.01 * g.next_standard()).collect();
    write_csv(dir.path(), "gdp", 1900, &x.values().iter().map(|v| v.exp()).collect::<Vec<_>>());
    write_csv(dir.path(), "leb", 1900, &y.iter().map(|v| v.exp()).collect::<Vec<_>>());
    let noise: Vec<f64> = (0..100).map(|_| 3.0 + g.next_standard()).collect();
    write_csv(dir.path(), "noise", 1900, &noise);
    dir
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(code(&spurion(&["frobnicate"])), 1);
    assert_eq!(code(&spurion(&["stationarity", "--level", "0.07"])), 1);
    assert_eq!(code(&spurion(&["stationarity"])), 1);
    assert_eq!(code(&spurion(&["--help"])), 0);
}

#[test]
fn stationarity_report_and_missing_label() {
    let dir = fixture();
    let d = dir.path().to_str().unwrap();
    let o = spurion(&["stationarity", "--data-dir", d, "--series", "gdp,leb", "--transform", "log"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["command"], "stationarity");
    assert_eq!(v["result"]["series"].as_array().unwrap().len(), 2);

    let o = spurion(&["stationarity", "--data-dir", d, "--series", "gdp,nosuch"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("nosuch"));
}

#[test]
fn gate_refusal_exits_two_and_force_runs() {
    let dir = fixture();
    let d = dir.path().to_str().unwrap();
    let o = spurion(&["coint", "--data-dir", d, "--series", "gdp,noise"]);
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--force"));
    let out = dir.path().join("coint.json");
    let o = spurion(&["coint", "--data-dir", d, "--series", "gdp,noise", "--force", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(v["result"]["gate"]["forced"], true);
}

#[test]
fn numerical_failure_exits_three() {
    let dir = fixture();
    write_csv(dir.path(), "flat", 1900, &[1.0; 100]);
    let d = dir.path().to_str().unwrap();
    let o = spurion(&["stationarity", "--data-dir", d, "--series", "flat"]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn simulate_plot_and_regress() {
    let dir = fixture();
    let d = dir.path().to_str().unwrap();
    let sim = dir.path().join("walk.csv");
    let o = spurion(&["simulate", "--len", "50", "--mu", "-0.2", "--sigma", "0.7", "--start", "1841", "--seed", "3", "--out", sim.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&sim).unwrap();
    assert!(text.starts_with("year,value\n1841,0\n"));
    assert_eq!(text.lines().count(), 51);
    let expected = generate_random_walk(&RandomWalkSpec { len: 50, mu: -0.2, sigma: 0.7, y0: 0.0, seed: 3 });
    let last: f64 = text.lines().last().unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert_eq!(last, expected.values()[49]);

    let svg = dir.path().join("out/plot.svg");
    let o = spurion(&["plot", "--data-dir", d, "--series", "gdp,leb", "--transform", "log", "--out", svg.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(svg.exists() && svg.with_extension("csv").exists());
    let o = spurion(&["plot", "--data-dir", d, "--series", "gdp,leb,noise,gdp,leb", "--out", svg.to_str().unwrap()]);
    assert_eq!(code(&o), 1);

    let o = spurion(&["regress", "--data-dir", d, "--series", "leb,gdp", "--transform", "log"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["result"]["r_squared"].as_f64().unwrap() > 0.5);
}

#[test]
fn audit_zero_trials_is_a_config_error() {
    let dir = fixture();
    let d = dir.path().to_str().unwrap();
    let o = spurion(&["audit", "--data-dir", d, "--target", "gdp", "--transform", "log", "--series", "gdp", "--trials", "0"]);
    assert_eq!(code(&o), 1, "{}", String::from_utf8_lossy(&o.stderr));
}
