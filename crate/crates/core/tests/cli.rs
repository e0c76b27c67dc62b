use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn crg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_crg"))
        .args(args)
        .output()
        .unwrap()
}

fn config(dir: &TempDir, name: &str, json: &str) -> PathBuf {
    let path = dir.path().join(name);
    fs::write(&path, json).unwrap();
    path
}

fn run(sub: &str, cfg: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        sub,
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    crg(&args)
}

fn read_json(path: PathBuf) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

const ANCHOR: &str = r#"{"blocks": [[1, 2]], "precision_digits": 60, "rho_H": 0.4}"#;

#[test]
fn construct_writes_zeros_and_residues() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(
        &dir,
        "f3.json",
        r#"{"rule": "factorial", "K": 3, "precision_digits": 60}"#,
    );
    let out = dir.path().join("out");
    let o = run("construct", &cfg, &out, &[]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert_eq!(
        read_json(out.join("zeros.json")).as_array().unwrap().len(),
        11
    );
    let sys = read_json(out.join("system.json"));
    assert_eq!(sys["K"], 3);
    assert_eq!(sys["total_zeros"], "11");

    let cfg = config(&dir, "anchor.json", ANCHOR);
    let o = run("construct", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(0));
    let res = read_json(out.join("residues.json"));
    let res = res.as_array().unwrap();
    assert_eq!(res.len(), 2);
    for e in res {
        let re: f64 = e["u"][0].as_str().unwrap().parse().unwrap();
        let im: f64 = e["u"][1].as_str().unwrap().parse().unwrap();
        assert!((re - 0.5).abs() < 1e-15 && im.abs() < 1e-15);
    }
}

#[test]
fn malformed_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(&dir, "bad.json", r#"{"rule": "factorial", "K": "#);
    let o = run("construct", &cfg, &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2));
    let missing = dir.path().join("missing.json");
    assert_eq!(
        run("verify", &missing, &dir.path().join("out"), &[])
            .status
            .code(),
        Some(2)
    );
    let cfg = config(&dir, "anchor.json", ANCHOR);
    let o = run(
        "verify",
        &cfg,
        &dir.path().join("out"),
        &["--checks", "nonsense"],
    );
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn low_precision_exits_3_with_suggestion() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(&dir, "f4.json", r#"{"rule": "factorial", "K": 4}"#);
    let o = run(
        "verify",
        &cfg,
        &dir.path().join("out"),
        &["--precision", "30"],
    );
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("suggested precision: 54"));
}

#[test]
fn verify_anchor_then_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(&dir, "anchor.json", ANCHOR);
    let out = dir.path().join("out");
    let o = run("verify", &cfg, &out, &["--points", "40"]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let text = fs::read_to_string(out.join("verify.jsonl")).unwrap();
    let records: Vec<Value> = text
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert!(records.iter().all(|r| r["pass"] == true));
    for check in [
        "residual_base",
        "residual_perturbed",
        "interpolation_identity",
        "summability",
        "proximity",
        "characteristic",
    ] {
        assert!(records.iter().any(|r| r["check"] == check), "{check}");
    }

    let o = crg(&["report", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let report = read_json(out.join("report.json"));
    assert_eq!(report["failed"], 0);
    let printed: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(printed, report);

    let empty = dir.path().join("empty");
    fs::create_dir(&empty).unwrap();
    assert_eq!(
        crg(&["report", "--out", empty.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn corrupted_residue_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(&dir, "anchor.json", ANCHOR);
    let out = dir.path().join("out");
    assert_eq!(run("construct", &cfg, &out, &[]).status.code(), Some(0));
    let mut res = read_json(out.join("residues.json"));
    res[0]["u"][0] = Value::String("0.6".into());
    let path = dir.path().join("bad_residues.json");
    fs::write(&path, res.to_string()).unwrap();
    let o = run(
        "verify",
        &cfg,
        &out,
        &[
            "--checks",
            "interpolation",
            "--residues",
            path.to_str().unwrap(),
        ],
    );
    assert_eq!(o.status.code(), Some(1));
    let text = fs::read_to_string(out.join("verify.jsonl")).unwrap();
    assert!(text.lines().any(|l| l.contains("\"pass\":false")));
}

#[test]
fn same_seed_gives_identical_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(&dir, "anchor.json", ANCHOR);
    let (a, b, c) = (
        dir.path().join("a"),
        dir.path().join("b"),
        dir.path().join("c"),
    );
    for (out, seed) in [(&a, "7"), (&b, "7"), (&c, "8")] {
        let o = run(
            "verify",
            &cfg,
            out,
            &["--checks", "residuals", "--points", "20", "--seed", seed],
        );
        assert_eq!(o.status.code(), Some(0));
    }
    let read = |p: &PathBuf| fs::read(p.join("verify.jsonl")).unwrap();
    assert_eq!(read(&a), read(&b));
    assert_ne!(read(&a), read(&c));
}

#[test]
fn witness_scan_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(
        &dir,
        "f7.json",
        r#"{"rule": "factorial", "K": 7, "precision_digits": 60}"#,
    );
    let out = dir.path().join("out");
    let o = run("scan", &cfg, &out, &["--scan", "witness"]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let summary = read_json(out.join("scan_summary.json"));
    assert_eq!(summary["witness"]["verdict"], "violation");
    let csv = fs::read_to_string(out.join("witness.csv")).unwrap();
    assert!(csv.starts_with("k,a,b,log_a,log_b"));

    let cfg = config(
        &dir,
        "one.json",
        r#"{"blocks": [[4, 2]], "precision_digits": 60}"#,
    );
    let o = run("scan", &cfg, &out, &["--scan", "witness"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(
        read_json(out.join("scan_summary.json"))["witness"]["verdict"],
        "no violation"
    );
}

#[test]
fn indicator_scan_of_h_is_positive() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(
        &dir,
        "h.json",
        r#"{"blocks": [[4, 2]], "precision_digits": 40, "rho_H": 0.25}"#,
    );
    let out = dir.path().join("out");
    let o = run("scan", &cfg, &out, &["--scan", "indicator"]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let summary = read_json(out.join("scan_summary.json"));
    let h = summary["indicator"]
        .as_array()
        .unwrap()
        .iter()
        .find(|s| s["function"] == "h")
        .unwrap()
        .clone();
    assert!(h["min_sample"].as_f64().unwrap() > 0.0);
    assert_eq!(h["pass"], true);
    let csv = fs::read_to_string(out.join("indicator_h.csv")).unwrap();
    assert!(csv.starts_with("r,theta,log_abs_f,ratio,excluded,pass"));
    assert_eq!(csv.lines().count(), 361);
}

#[test]
fn order_scan_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(
        &dir,
        "f4.json",
        r#"{"rule": "factorial", "K": 4, "precision_digits": 60}"#,
    );
    let out = dir.path().join("out");
    let o = run("scan", &cfg, &out, &["--scan", "order", "--ks", "4..6"]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let csv = fs::read_to_string(out.join("order.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("k,kind,log_r,log_m_upper,log_m_lower,ratio")
    );
    assert_eq!(lines.count(), 6);
}
