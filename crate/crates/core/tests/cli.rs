use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gamow-lab"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn data_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(2)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn poles_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["poles", "--lambda", "100", "--kmax", "16"]);
    assert!(o.status.success());
    let text = fs::read_to_string(dir.path().join("poles.csv")).unwrap();
    assert!(text.starts_with("# gamow-lab ") && text.lines().next().unwrap().contains("config={"));
    let rows = data_rows(&dir.path().join("poles.csv"));
    assert_eq!(rows.len(), 5);
    let re: f64 = rows[0][1].parse().unwrap();
    assert!((re - 3.1105268272139179).abs() < 1e-12);
}

#[test]
fn empty_table_below_first_pole() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["poles", "--lambda", "100", "--kmax", "3"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(data_rows(&dir.path().join("poles.csv")).is_empty());
}

#[test]
fn weak_well_rows_are_flagged() {
    let dir = tempfile::tempdir().unwrap();
    assert!(
        run(dir.path(), &["poles", "--lambda", "0.5", "--kmax", "10"])
            .status
            .success()
    );
    let rows = data_rows(&dir.path().join("poles.csv"));
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|r| r.last().unwrap() == "not-metastable"));
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["evolve", "--times=-1"][..],
        &["survival", "--times", ""][..],
        &["evolve", "--profile", "triangle"][..],
        &["poles", "--lambda", "-3"][..],
    ] {
        let o = run(dir.path(), args);
        assert_eq!(o.status.code(), Some(1), "{args:?}");
    }
}

#[test]
fn initial_snapshot_is_box_mode() {
    let dir = tempfile::tempdir().unwrap();
    assert!(
        run(dir.path(), &["evolve", "--lambda", "10", "--times", "0"])
            .status
            .success()
    );
    for r in data_rows(&dir.path().join("snapshot_000.csv")) {
        let x: f64 = r[1].parse().unwrap();
        let abs2: f64 = r[4].parse().unwrap();
        let exact = 2.0 * (std::f64::consts::PI * x).sin().powi(2);
        assert!((abs2 - exact).abs() < 1e-4, "x {x}: {abs2} vs {exact}");
    }
}

#[test]
fn both_methods_agree_at_first_lifetime() {
    let dir = tempfile::tempdir().unwrap();
    let tau = "84.05857728";
    let o = run(
        dir.path(),
        &[
            "evolve", "--lambda", "100", "--times", tau, "--policy", "both", "--format", "json",
        ],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&dir.path().join("evolve.json"));
    let d = v["data"][0]["discrepancy"].as_f64().unwrap();
    assert!(d < 1e-6, "discrepancy {d}");
}

#[test]
fn survival_summary() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run(
        dir.path(),
        &["survival", "--lambda", "100", "--times", "1:1000:10"]
    )
    .status
    .success());
    let s = json(&dir.path().join("regime.json"));
    let ratio = s["data"]["gamma_ratio"].as_f64().unwrap();
    assert!((0.98..=1.02).contains(&ratio), "{ratio}");
    let rows = data_rows(&dir.path().join("survival.csv"));
    assert!(rows
        .windows(2)
        .all(|w| w[1][1].parse::<f64>().unwrap() < w[0][1].parse::<f64>().unwrap()));

    assert!(run(
        dir.path(),
        &["survival", "--lambda", "10", "--times", "1:10:5"]
    )
    .status
    .success());
    let s = json(&dir.path().join("regime.json"));
    let slope = s["data"]["s_fit"].as_f64().unwrap();
    assert!((-3.15..=-2.85).contains(&slope), "{slope}");
}

#[test]
fn outputs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    for (args, file) in [
        (
            &["report", "--lambda", "10", "--format", "json"][..],
            "report.json",
        ),
        (
            &["evolve", "--lambda", "10", "--times", "0.5,1"][..],
            "snapshot_001.csv",
        ),
    ] {
        assert!(run(dir.path(), args).status.success());
        let first = fs::read(dir.path().join(file)).unwrap();
        assert!(run(dir.path(), args).status.success());
        assert_eq!(first, fs::read(dir.path().join(file)).unwrap(), "{file}");
    }
}
