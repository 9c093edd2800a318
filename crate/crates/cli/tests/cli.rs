use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn thinpair(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_thinpair"))
        .args(args)
        .env_remove("THINPAIR_CACHE_DIR")
        .output()
        .expect("binary runs")
}

fn json_out(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn enumerate_counts_and_lists() {
    let dir = tempfile::tempdir().unwrap();
    let list = dir.path().join("b1.jsonl");
    let v = json_out(&thinpair(&["enumerate", "--n", "2", "--X", "1", "--out", list.to_str().unwrap()]));
    assert_eq!(v["count"], 4);
    let text = std::fs::read_to_string(&list).unwrap();
    assert_eq!(text.lines().count(), 5);

    let v = json_out(&thinpair(&["enumerate", "--n", "3", "--X", "2.5", "--symmetrized"]));
    assert!(v["count"].as_u64().unwrap() > 24);
}

#[test]
fn certify_and_refuse() {
    let dir = tempfile::tempdir().unwrap();
    let good = write(
        dir.path(),
        "good.json",
        r#"{"g1": [["610", "377"], ["377", "233"]], "g2": [[233, 377], [377, 610]]}"#,
    );
    let v = json_out(&thinpair(&["certify", "--pair", &good, "--n", "2", "--k", "1", "--eps", "0.1", "--r", "0.25"]));
    assert_eq!(v["certified"], true);
    assert_eq!(v["certificate"]["witnesses"].as_array().unwrap().len(), 4);

    let bad = write(dir.path(), "bad.json", r#"{"g1": [[1, 0], [0, 1]], "g2": [[1, 1], [0, 1]]}"#);
    let v = json_out(&thinpair(&["certify", "--pair", &bad]));
    assert_eq!(v["certified"], false);
    assert_eq!(v["refusal"]["condition"], "g1 is not eps-contracting");

    let out = thinpair(&["certify", "--pair", &good, "--eps", "0.3"]);
    assert_eq!(out.status.code(), Some(2));
    let out = thinpair(&["certify", "--pair", &good, "--n", "3"]);
    assert_eq!(out.status.code(), Some(2));
    let singular = write(dir.path(), "sing.json", r#"{"g1": [[2, 0], [0, 1]], "g2": [[1, 0], [0, 1]]}"#);
    assert_eq!(thinpair(&["certify", "--pair", &singular]).status.code(), Some(2));
    let missing = dir.path().join("nope.json");
    assert_eq!(thinpair(&["certify", "--pair", missing.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn schottky_then_hausdorff() {
    let dir = tempfile::tempdir().unwrap();
    let pair = write(dir.path(), "p.json", r#"{"g1": [[34, 21], [21, 13]], "g2": [[34, -21], [-21, 13]]}"#);
    let out = thinpair(&["schottky", "--pair", &pair]);
    let v = json_out(&out);
    assert_eq!(v["certified"], true);
    let cert = write(dir.path(), "cert.json", &String::from_utf8(out.stdout).unwrap());
    let b = json_out(&thinpair(&["hausdorff", "--cert", &cert]));
    let bound = b["bound"].as_f64().unwrap();
    assert!(bound > 0.0 && bound < 1.0);

    let same = write(dir.path(), "s.json", r#"{"g1": [[2, 1], [1, 1]], "g2": [[2, 1], [1, 1]]}"#);
    let v = json_out(&thinpair(&["schottky", "--pair", &same]));
    assert_eq!(v["certified"], false);
}

#[test]
fn oracle_lyapunov_wordstats() {
    let dir = tempfile::tempdir().unwrap();
    let rot = write(dir.path(), "r.json", r#"{"g1": [[0, -1], [1, 0]], "g2": [[1, 1], [0, 1]]}"#);
    let v = json_out(&thinpair(&["oracle", "--pair", &rot, "--max-len", "6"]));
    assert_eq!(v["length"], 4);
    assert_eq!(thinpair(&["oracle", "--pair", &rot, "--max-len", "13"]).status.code(), Some(3));

    let fib = write(dir.path(), "f.json", r#"{"g1": [[2, 1], [1, 1]], "g2": [[1, 2], [0, 1]]}"#);
    let a = json_out(&thinpair(&["lyapunov", "--pair", &fib, "--m", "100", "--trials", "8", "--seed", "3"]));
    let b = json_out(&thinpair(&["lyapunov", "--pair", &fib, "--m", "100", "--trials", "8", "--seed", "3"]));
    assert_eq!(a, b);
    assert!(a["mean"].as_f64().unwrap() > 0.0);

    let w = json_out(&thinpair(&["wordstats", "--m", "2", "--trials", "4000", "--seed", "1"]));
    assert!((w["mean"].as_f64().unwrap() - 0.75).abs() < 0.03);
}

#[test]
fn volume_closed_form() {
    let v = json_out(&thinpair(&["volume", "--n", "2", "--logX", "3", "--resolution", "512"]));
    let want = (6f64.cosh() - 1.0) / 2.0;
    assert!((v["value"].as_f64().unwrap() - want).abs() / want < 1e-6);
    let g = json_out(&thinpair(&["volume", "--n", "3", "--logX", "4", "--symmetrized", "--gaps", "1:0.5,2:0.5", "--resolution", "128"]));
    assert!(g["value"].as_f64().unwrap() > 0.0);
    assert_eq!(thinpair(&["volume", "--n", "6", "--logX", "1"]).status.code(), Some(2));
    assert_eq!(thinpair(&["volume", "--n", "3", "--logX", "1", "--gaps", "x"]).status.code(), Some(2));
}

#[test]
fn experiment_reports_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "cfg.json",
        r#"{"n": 2, "X_grid": [1, 10, 30], "symmetrized": true, "pairs_per_X": 100, "eps": 0.2, "r": 0.5,
            "eta": 3, "oracle_depth": 6, "seed": 9, "lyapunov_m": 60, "lyapunov_trials": 2}"#,
    );
    let a = thinpair(&["experiment", "--config", &cfg]);
    assert!(a.status.success());
    let csv = String::from_utf8(a.stdout).unwrap();
    assert_eq!(csv.lines().count(), 4);
    assert!(csv.starts_with("X,count_ball,"));

    let cache = dir.path().join("cache");
    let out = dir.path().join("rep.json");
    let b = Command::new(env!("CARGO_BIN_EXE_thinpair"))
        .args(["experiment", "--config", &cfg, "--format", "json", "--out", out.to_str().unwrap()])
        .env("THINPAIR_CACHE_DIR", &cache)
        .output()
        .unwrap();
    assert!(b.status.success());
    assert_eq!(std::fs::read_dir(&cache).unwrap().count(), 3);
    let first = std::fs::read(&out).unwrap();
    let c = Command::new(env!("CARGO_BIN_EXE_thinpair"))
        .args(["experiment", "--config", &cfg, "--format", "json", "--out", out.to_str().unwrap()])
        .env("THINPAIR_CACHE_DIR", &cache)
        .env("RAYON_NUM_THREADS", "1")
        .output()
        .unwrap();
    assert!(c.status.success());
    assert_eq!(std::fs::read(&out).unwrap(), first);

    let budget = write(
        dir.path(),
        "big.json",
        r#"{"n": 3, "X_grid": [9], "symmetrized": true, "pairs_per_X": 10, "eps": 0.2, "r": 0.5,
            "eta": 3, "oracle_depth": 6, "seed": 9}"#,
    );
    assert_eq!(thinpair(&["experiment", "--config", &budget]).status.code(), Some(3));
    let bad = write(
        dir.path(),
        "bad.json",
        r#"{"n": 2, "X_grid": [5], "symmetrized": true, "pairs_per_X": 10, "eps": 0.2, "r": 0.3,
            "eta": 3, "oracle_depth": 6, "seed": 9}"#,
    );
    assert_eq!(thinpair(&["experiment", "--config", &bad]).status.code(), Some(2));
}
