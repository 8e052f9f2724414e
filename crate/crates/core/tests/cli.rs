use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_mts-anomaly");

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .current_dir(dir)
        .env("MTS_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = run(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn synth(dir: &Path) {
    ok(dir, &["synth", "--length", "200", "--seed", "3"]);
}

const FAST: [&str; 4] = ["--pso-particles", "6", "--pso-iters", "5"];

fn detect(dir: &Path, prefix: &str) {
    let mut args = vec![
        "detect",
        "--input",
        "synth.csv",
        "--window",
        "10",
        "--out-prefix",
        prefix,
    ];
    args.extend(FAST);
    ok(dir, &args);
}

#[test]
fn synth_detect_eval_round_trip() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    synth(d);
    detect(d, "run");
    let points = fs::read_to_string(d.join("run.points.csv")).unwrap();
    let mut lines = points.lines();
    assert_eq!(lines.next(), Some("t,point_score"));
    assert_eq!(lines.count(), 200);
    let subs = fs::read_to_string(d.join("run.subsequences.csv")).unwrap();
    assert_eq!(subs.lines().next(), Some("start_index,score"));
    assert_eq!(subs.lines().count(), 1 + 191);

    let report = ok(
        d,
        &[
            "eval",
            "--scores",
            "run.points.csv",
            "--truth",
            "synth.labels.csv",
            "--best-threshold",
        ],
    );
    assert!(report.contains("accuracy"));
    assert!(report.contains("f-measure"));

    // a threshold below every score flags everything
    let all = ok(
        d,
        &[
            "eval",
            "--scores",
            "run.points.csv",
            "--truth",
            "synth.labels.csv",
            "--threshold",
            "-1",
        ],
    );
    assert!(all.contains("TN 0"));
    assert!(all.contains("FN 0"));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    synth(d);
    let first = fs::read(d.join("synth.csv")).unwrap();
    synth(d);
    assert_eq!(first, fs::read(d.join("synth.csv")).unwrap());

    detect(d, "a");
    detect(d, "b");
    for suffix in ["points.csv", "subsequences.csv"] {
        let a = fs::read(d.join(format!("a.{suffix}"))).unwrap();
        let b = fs::read(d.join(format!("b.{suffix}"))).unwrap();
        assert_eq!(a, b, "{suffix} differs");
    }
    let manifest = |p: &str| {
        let mut v: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(d.join(p)).unwrap()).unwrap();
        let obj = v.as_object_mut().unwrap();
        assert!(obj.remove("duration_seconds").is_some());
        obj.remove("outputs");
        v
    };
    assert_eq!(manifest("a.manifest.json"), manifest("b.manifest.json"));
}

#[test]
fn window_longer_than_series_exits_2() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    synth(d);
    let out = run(d, &["detect", "--input", "synth.csv", "--window", "600"]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(
        stderr.starts_with("error: kind=invalid-spec message="),
        "{stderr}"
    );
}

#[test]
fn missing_input_exits_2() {
    let dir = TempDir::new().unwrap();
    let out = run(dir.path(), &["detect", "--input", "nope.csv"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr)
        .unwrap()
        .starts_with("error: kind=io"));
}

#[test]
fn malformed_csv_exits_2() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    fs::write(d.join("bad.csv"), "a,b\n1,2\n3,oops\n").unwrap();
    let out = run(d, &["detect", "--input", "bad.csv"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr)
        .unwrap()
        .starts_with("error: kind=parse"));
}

#[test]
fn tune_writes_full_grid() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    synth(d);
    let mut args = vec![
        "tune",
        "--input",
        "synth.csv",
        "--labels",
        "synth.labels.csv",
        "--clusters-range",
        "2:3",
        "--window-range",
        "8:10",
        "--out-prefix",
        "tn",
    ];
    args.extend(["--pso-particles", "4", "--pso-iters", "3"]);
    let stdout = ok(d, &args);
    let grid = fs::read_to_string(d.join("tn.fgrid.csv")).unwrap();
    let mut lines = grid.lines();
    assert_eq!(lines.next(), Some("clusters,window,confidence_index"));
    let rows: Vec<(String, f64)> = lines
        .map(|l| {
            let (key, f) = l.rsplit_once(',').unwrap();
            (key.to_string(), f.parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 6);
    let (key, _) = rows
        .iter()
        .fold(None::<&(String, f64)>, |best, r| match best {
            Some(b) if b.1 >= r.1 => Some(b),
            _ => Some(r),
        })
        .unwrap();
    let (c, q) = key.split_once(',').unwrap();
    assert!(stdout.contains(&format!("best clusters {c} window {q} ")));
}

#[test]
fn baselines_write_scores() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    synth(d);
    for method in ["knn", "fcm"] {
        let mut args = vec![
            "baseline",
            "--method",
            method,
            "--input",
            "synth.csv",
            "--window",
            "10",
            "--out-prefix",
            method,
        ];
        args.extend(FAST);
        ok(d, &args);
        let points = fs::read_to_string(d.join(format!("{method}.points.csv"))).unwrap();
        assert_eq!(points.lines().count(), 201);
        for line in points.lines().skip(1) {
            let (_, v) = line.split_once(',').unwrap();
            assert!(v.parse::<f64>().unwrap() >= 0.0);
        }
    }
}

#[test]
fn eval_needs_a_threshold_choice() {
    let dir = TempDir::new().unwrap();
    let out = run(dir.path(), &["eval", "--scores", "a", "--truth", "b"]);
    assert!(!out.status.success());
    let both = run(
        dir.path(),
        &[
            "eval",
            "--scores",
            "a",
            "--truth",
            "b",
            "--threshold",
            "1",
            "--best-threshold",
        ],
    );
    assert!(!both.status.success());
}
