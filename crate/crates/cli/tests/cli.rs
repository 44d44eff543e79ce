use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_clusterrec"));
    c.env_remove("CLUSTERREC_OUT");
    c
}

fn run_ok(args: &[&str], cwd: &Path) -> Output {
    let out = bin().args(args).current_dir(cwd).output().unwrap();
    assert!(
        out.status.success(),
        "clusterrec {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn run_err(args: &[&str], cwd: &Path) -> String {
    let out = bin().args(args).current_dir(cwd).output().unwrap();
    assert!(!out.status.success(), "clusterrec {args:?} unexpectedly succeeded");
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(err.trim_end().lines().count(), 1, "diagnostic should be one line: {err}");
    err
}

fn json(path: PathBuf) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

/// Small 1..5 rating file in the `::` layout.
fn write_dat(dir: &Path) -> PathBuf {
    let mut text = String::new();
    for u in 1..=40u32 {
        for m in 1..=30u32 {
            if (u * 7 + m * 3) % 4 == 0 {
                continue;
            }
            let liked = (u % 2 == 0) == (m % 3 == 0);
            let r = if liked { 4 + (u + m) % 2 } else { 1 + (u * m) % 3 };
            text.push_str(&format!("{u}::{m}::{r}::97830{u}{m}\n"));
        }
    }
    let path = dir.join("ratings.dat");
    fs::write(&path, text).unwrap();
    path
}

fn dir_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn synth_writes_instance_and_thresholds() {
    let tmp = TempDir::new().unwrap();
    run_ok(
        &["synth", "--U", "400", "--M", "400", "--K", "4", "--p", "0.9", "--alpha", "0.08", "--beta", "0.5", "--out", "s"],
        tmp.path(),
    );
    let s = tmp.path().join("s");
    for f in ["manifest.json", "truth.csv", "observed.csv", "clusters.csv", "thresholds.json", "instance.json"] {
        assert!(s.join(f).is_file(), "missing {f}");
    }
    let truth = fs::read_to_string(s.join("truth.csv")).unwrap();
    assert_eq!(truth.lines().count(), 1 + 400 * 400);
    let th = json(s.join("thresholds.json"));
    let expected = 4.0 * 400f64.ln() / 400.0;
    assert!((th["clustering_sufficient_alpha"].as_f64().unwrap() - expected).abs() < 1e-12);
    assert!((th["clustering_necessary_alpha"].as_f64().unwrap() - 0.01).abs() < 1e-12);
    let m = json(s.join("manifest.json"));
    assert_eq!(m["config"]["model"]["alpha"], 0.08);
    assert_eq!(m["seed"], 0);
}

#[test]
fn sweep_emits_one_row_per_point_and_trial() {
    let tmp = TempDir::new().unwrap();
    run_ok(
        &["sweep", "--param", "alpha", "--from", "0.005", "--to", "0.1", "--steps", "10", "--trials", "20", "--out", "sw"],
        tmp.path(),
    );
    let csv = fs::read_to_string(tmp.path().join("sw/sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 200);
    let rec = fs::read_to_string(tmp.path().join("sw/recovery.csv")).unwrap();
    assert_eq!(rec.lines().count(), 1 + 10);
}

#[test]
fn run_report_and_replay_are_reproducible() {
    let tmp = TempDir::new().unwrap();
    let data = write_dat(tmp.path());
    let data = data.to_str().unwrap();
    run_ok(&["run", "--algo", "hcor", "--data", data, "--hide", "0.7", "--seed", "1", "--out", "a"], tmp.path());
    let a = tmp.path().join("a");
    for f in ["report.json", "report.csv", "predictions.csv", "train.csv", "test.csv", "meta.json"] {
        assert!(a.join(f).is_file(), "missing {f}");
    }
    let report = json(a.join("report.json"));
    let counts = &report["counts"];
    let total = counts["total"].as_u64().unwrap();
    assert_eq!(
        total,
        counts["correct"].as_u64().unwrap() + counts["wrong"].as_u64().unwrap() + counts["unpredicted"].as_u64().unwrap()
    );
    assert_eq!(report["protocol"]["quantize"], 3.5);

    // metrics recomputed from the stored predictions
    run_ok(&["report", "--run", "a", "--out", "rep"], tmp.path());
    assert_eq!(fs::read(a.join("report.json")).unwrap(), fs::read(tmp.path().join("rep/report.json")).unwrap());
    assert_eq!(fs::read(a.join("report.csv")).unwrap(), fs::read(tmp.path().join("rep/report.csv")).unwrap());

    for threads in ["1", "3"] {
        let out = format!("replay{threads}");
        run_ok(&["--manifest", "a/manifest.json", "--threads", threads, "--out", &out], tmp.path());
        assert_eq!(dir_files(&a), dir_files(&tmp.path().join(&out)));
    }
}

#[test]
fn synthetic_run_without_data() {
    let tmp = TempDir::new().unwrap();
    run_ok(
        &["run", "--algo", "ucr", "--U", "60", "--M", "60", "--K", "3", "--alpha", "0.3", "--beta", "0.8", "--size", "k:3", "--out", "o"],
        tmp.path(),
    );
    let m = json(tmp.path().join("o/manifest.json"));
    assert_eq!(m["config"]["source"]["kind"], "synthetic");
    assert_eq!(m["config"]["protocol"]["quantize"], serde_json::Value::Null);
    let r = json(tmp.path().join("o/report.json"));
    assert_eq!(r["algorithm"]["cluster_size"], 20);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let tmp = TempDir::new().unwrap();
    fs::write(tmp.path().join("exp.conf"), "# experiment\nU = 40\nM = 40\nK = 2\nalpha = 0.2\nbeta = 0.6\nseed = 5\n").unwrap();
    run_ok(&["synth", "--config", "exp.conf", "--alpha", "0.3", "--out", "c"], tmp.path());
    let m = json(tmp.path().join("c/manifest.json"));
    let model = &m["config"]["model"];
    assert_eq!(model["users"], 40);
    assert_eq!(model["alpha"], 0.3);
    assert_eq!(model["beta"], 0.6);
    assert_eq!(m["seed"], 5);
}

#[test]
fn output_directory_from_environment() {
    let tmp = TempDir::new().unwrap();
    let out = bin()
        .args(["synth", "--U", "20", "--M", "20", "--K", "2"])
        .env("CLUSTERREC_OUT", "from-env")
        .current_dir(tmp.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(tmp.path().join("from-env/manifest.json").is_file());
}

#[test]
fn ingest_writes_indexed_triples() {
    let tmp = TempDir::new().unwrap();
    let data = write_dat(tmp.path());
    run_ok(&["ingest", "--data", data.to_str().unwrap(), "--quantize", "3.5", "--out", "i"], tmp.path());
    let summary = json(tmp.path().join("i/summary.json"));
    assert_eq!(summary["users"], 40);
    assert_eq!(summary["items"], 30);
    assert_eq!(summary["levels"], 2);
    let ids = fs::read_to_string(tmp.path().join("i/user_ids.csv")).unwrap();
    assert_eq!(ids.lines().nth(1), Some("0,1"));
}

#[test]
fn failures_give_one_line_diagnostics() {
    let tmp = TempDir::new().unwrap();
    let data = write_dat(tmp.path());
    let data = data.to_str().unwrap();
    assert!(run_err(&["run", "--bogus"], tmp.path()).contains("--bogus"));
    assert!(run_err(&["run", "--algo", "ucr", "--data", "missing.dat"], tmp.path()).contains("missing.dat"));
    assert!(run_err(&["run", "--algo", "nope", "--data", data], tmp.path()).contains("unknown algorithm"));
    assert!(run_err(&["run", "--algo", "ucr", "--data", data, "--U", "10"], tmp.path()).contains("--data"));
    assert!(run_err(&["synth", "--alpha", "0.7", "--beta", "0.5"], tmp.path()).contains("alpha"));
    assert!(run_err(&["run", "--algo", "ucr", "--G", "5"], tmp.path()).contains("--liked"));
    assert!(run_err(&["sweep", "--param", "gamma", "--from", "0", "--to", "1"], tmp.path()).contains("gamma"));
    assert!(run_err(&[], tmp.path()).contains("subcommand"));
    assert!(run_err(&["--manifest", "none.json"], tmp.path()).contains("none.json"));
    fs::write(tmp.path().join("bad.conf"), "frobnicate = 3\n").unwrap();
    assert!(run_err(&["synth", "--config", "bad.conf"], tmp.path()).contains("frobnicate"));
}
