use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_poa-lab")).args(args).output().unwrap()
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("exp.json");
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

const SWEEP: &str = r#"{
    "name": "sweep",
    "kind": "gap-sweep",
    "network": { "n": 1000, "d1": 32, "d2": 25, "d_s": 15 },
    "deltas": [10, 50],
    "ratio_grid": { "start": 0.001, "stop": 0.1, "points": 5, "spacing": "log" }
}"#;

const THROUGHPUT: &str = r#"{
    "name": "thr",
    "kind": "throughput-vs-ratio",
    "network": { "n": 100, "d1": 32, "d2": 25, "d_s": 15 },
    "deltas": [10],
    "ratios": [0.05, 0.2],
    "blocks": 3000,
    "seeds": [4]
}"#;

#[test]
fn run_writes_tables_and_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SWEEP);
    let out = tmp.path().join("out");
    let o = lab(&["run", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("gap_sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 5);
    assert!(csv.starts_with("ratio,delta,g,"));
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["kind"], "gap-sweep");
    let defaulted: Vec<&str> = manifest["defaulted"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert!(defaulted.contains(&"network.epsilon"), "{defaulted:?}");
    assert!(!defaulted.contains(&"output_dir"));
    assert_eq!(manifest["overridden"][0], "output_dir");
}

#[test]
fn simulation_runs_are_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), THROUGHPUT);
    let mut tables = Vec::new();
    for run in ["a", "b"] {
        let out = tmp.path().join(run);
        let o = lab(&["run", &cfg, "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        tables.push(fs::read(out.join("throughput.csv")).unwrap());
    }
    assert_eq!(tables[0], tables[1]);
    let other = tmp.path().join("c");
    assert!(lab(&["run", &cfg, "--out", other.to_str().unwrap(), "--seeds", "5"]).status.success());
    assert_ne!(tables[0], fs::read(other.join("throughput.csv")).unwrap());
}

#[test]
fn bad_config_exits_one_without_output() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &SWEEP.replace(r#""points": 5"#, r#""points": 0"#));
    let out = tmp.path().join("out");
    let o = lab(&["run", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("ratio grid must not be empty"));
    assert!(!out.exists());
}

#[test]
fn missing_config_exits_one() {
    assert_eq!(lab(&["run", "/nonexistent/exp.json"]).status.code(), Some(1));
}

#[test]
fn bad_flags_exit_one() {
    assert_eq!(lab(&["solve", "--n", "ten"]).status.code(), Some(1));
    assert_eq!(lab(&["frobnicate"]).status.code(), Some(1));
}

#[test]
fn solve_prints_rates() {
    let o = lab(&["solve", "--n", "100", "--n1", "10", "--d1", "32", "--d2", "25", "--d-s", "15", "--delta", "10"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let g: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("g="))
        .expect("g line")
        .parse()
        .unwrap();
    assert!(g > 0.0 && g < 1.0);
    assert!(text.lines().any(|l| l.starts_with("rho_pool=")));
}

#[test]
fn solve_non_convergence_exits_two() {
    let o = lab(&[
        "solve", "--n", "100", "--n1", "10", "--d1", "32", "--d2", "25", "--d-s", "15", "--delta", "10", "--max-iterations", "1",
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stdout));
}

#[test]
fn simulate_reports_json_and_samples() {
    let tmp = tempfile::tempdir().unwrap();
    let samples = tmp.path().join("gaps.csv");
    let o = lab(&[
        "simulate", "--n1", "10", "--n2", "90", "--d1", "32", "--d2", "25", "--d-s", "15", "--delta", "10", "--blocks", "2000",
        "--seed", "3", "--samples", samples.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    for key in ["rho_pool", "rho_solo", "rho_total", "virtual_time"] {
        assert!(report[key].as_f64().unwrap() > 0.0, "{key}");
    }
    assert_eq!(report["blocks"], 2000);
    assert_eq!(report["seed"], 3);
    let text = fs::read_to_string(samples).unwrap();
    assert_eq!(text.lines().next(), Some("entity_kind,gap"));
    assert!(text.lines().count() > 100);
}
