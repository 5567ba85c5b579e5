use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_w-expander"))
        .args(args)
        .env("W_EXPANDER_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn build(dir: &Path, name: &str, args: &[&str]) -> String {
    let path = dir.join(name).to_string_lossy().into_owned();
    let mut full = vec!["build"];
    full.extend_from_slice(args);
    full.extend_from_slice(&["-o", &path]);
    let out = run(&full);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    path
}

fn eval(path: &str, w: &str) -> Output {
    run(&["eval", "-c", path, "-N", w])
}

#[test]
fn optimal_n2_has_one_balanced_splitter() {
    let out = run(&["build", "--kind", "optimal", "-n", "2"]);
    assert!(out.status.success());
    let spec = json(&out);
    let elements = spec["elements"].as_array().unwrap();
    let splitters: Vec<&Value> = elements.iter().filter(|e| e["kind"] == "bs").collect();
    assert_eq!(splitters.len(), 1);
    assert_eq!(splitters[0]["params"]["t"].as_f64().unwrap(), 0.5);
    assert!(elements.iter().any(|e| e["kind"] == "pdbs"));
}

#[test]
fn lossy_n1_parameters() {
    let spec = json(&run(&["build", "--kind", "lossy", "-n", "1"]));
    let elements = spec["elements"].as_array().unwrap();
    let pdbs = elements.iter().find(|e| e["kind"] == "pdbs").unwrap();
    assert_eq!(pdbs["params"]["t_h"].as_f64().unwrap(), 0.25);
    let bs = elements.iter().find(|e| e["kind"] == "bs").unwrap();
    assert_eq!(bs["params"]["t"].as_f64().unwrap(), 0.5);
}

#[test]
fn eval_reports_success_probabilities() {
    let dir = tempfile::tempdir().unwrap();
    let optimal = build(dir.path(), "o.json", &["--kind", "optimal", "-n", "1"]);
    let out = eval(&optimal, "4");
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert!(r["exact_w"].as_bool().unwrap());
    assert!((r["p_suc"].as_f64().unwrap() - 0.25).abs() < 1e-12);
    assert_eq!(r["N"], 4);

    let lossy = build(dir.path(), "l.json", &["--kind", "lossy", "-n", "2"]);
    let r = json(&eval(&lossy, "2"));
    assert!((r["p_suc"].as_f64().unwrap() - 128.0 * 4.0 / (2187.0 * 2.0)).abs() < 1e-12);

    let hm = build(
        dir.path(),
        "h.json",
        &["--kind", "hm", "-n", "3", "-m", "2"],
    );
    let out = run(&["eval", "-c", &hm]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["N"], 2);
}

#[test]
fn eval_rejects_non_expanders_with_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("half.json");
    std::fs::write(
        &path,
        r#"{"n": 1, "width": 2, "output_modes": [1, 2],
            "elements": [{"kind": "pdbs", "modes": [1, 2], "params": {"t_h": 0.5, "t_v": 0.5}}]}"#,
    )
    .unwrap();
    let out = eval(path.to_str().unwrap(), "2");
    assert_eq!(out.status.code(), Some(3));
    let r = json(&out);
    assert!(!r["exact_w"].as_bool().unwrap());
    assert!(!r["violations"].as_array().unwrap().is_empty());
}

#[test]
fn usage_and_parse_errors_exit_2() {
    for args in [
        vec!["build", "--kind", "optimal", "-n", "2", "-m", "1"],
        vec!["build", "--kind", "hm", "-n", "2"],
        vec!["build", "--kind", "hm", "-n", "2", "-m", "3"],
        vec!["build", "--kind", "optimal", "-n", "0"],
        vec!["eval", "-c", "/nonexistent/file.json"],
        vec!["scan", "--n-max", "0", "--N-max", "3", "--format", "csv"],
        vec!["optimize", "-n", "2", "--restarts", "0"],
        vec!["frobnicate"],
    ] {
        let out = run(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(out.stdout.is_empty(), "{args:?}");
    }

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, "{\"n\": 1, \"width\": 2").unwrap();
    assert_eq!(eval(path.to_str().unwrap(), "2").status.code(), Some(2));
    let path = dir.path().join("extra.json");
    std::fs::write(
        &path,
        r#"{"n": 1, "width": 2, "output_modes": [1, 2], "elements": [], "colour": 3}"#,
    )
    .unwrap();
    assert_eq!(eval(path.to_str().unwrap(), "2").status.code(), Some(2));
    let optimal = build(dir.path(), "o.json", &["--kind", "optimal", "-n", "1"]);
    assert_eq!(eval(&optimal, "1").status.code(), Some(2));
}

#[test]
fn scan_csv_rows() {
    let out = run(&["scan", "--n-max", "3", "--N-max", "40", "--format", "csv"]);
    assert!(out.status.success());
    let mut reader = csv::Reader::from_reader(out.stdout.as_slice());
    assert_eq!(
        reader.headers().unwrap().iter().collect::<Vec<_>>(),
        ["n", "N", "P_max", "P_lossy", "H_1", "H_lossy"]
    );
    let rows: Vec<Vec<f64>> = reader
        .records()
        .map(|r| r.unwrap().iter().map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 3 * 39);
    for r in &rows {
        assert!(r[2] >= r[3]);
    }
    for pair in rows.windows(2) {
        if pair[0][0] == pair[1][0] {
            assert!(pair[1][2] < pair[0][2]);
        }
    }
    let at = |n: f64, w: f64| rows.iter().find(|r| r[0] == n && r[1] == w).unwrap()[2];
    assert!((at(1.0, 2.0) - 0.3).abs() < 1e-12);
    assert!((at(2.0, 2.0) - 0.128).abs() < 1e-12);
}

#[test]
fn scan_json_rows() {
    let out = run(&["scan", "--n-max", "2", "--N-max", "2", "--format", "json"]);
    let rows = json(&out);
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0]["N"], 2);
    assert!((rows[1]["H_1"].as_f64().unwrap() - 0.032).abs() < 1e-12);
}

#[test]
fn optimize_is_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.csv");
    let args = [
        "optimize",
        "-n",
        "2",
        "--restarts",
        "3",
        "--seed",
        "9",
        "--trace",
        trace.to_str().unwrap(),
    ];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let r = json(&a);
    assert!((r["best_h"].as_f64().unwrap() - 0.032).abs() < 1e-6);
    assert_eq!(r["classification"]["kind"], "lossless_m");
    assert_eq!(r["classification"]["m"], 1);
    let text = std::fs::read_to_string(trace).unwrap();
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn verify_small_run_passes_and_tamper_fails() {
    let out = run(&["verify", "--n-max", "6", "--engine-n-max", "3"]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(json(&out)["all_passed"].as_bool().unwrap());

    let out = run(&["verify", "--n-max", "3", "-n", "2", "--tamper"]);
    assert_eq!(out.status.code(), Some(3));
    let r = json(&out);
    let failed: Vec<&str> = r["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| !c["passed"].as_bool().unwrap())
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert!(!failed.is_empty());
    assert!(failed.iter().all(|n| n.starts_with("saturation.optimal")));
    assert!(String::from_utf8_lossy(&out.stderr).contains("saturation.optimal"));
}

#[test]
fn bad_thread_setting_is_a_usage_error() {
    let out = Command::new(env!("CARGO_BIN_EXE_w-expander"))
        .args(["scan", "--n-max", "1", "--N-max", "2"])
        .env("W_EXPANDER_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
