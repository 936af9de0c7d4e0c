//! End-to-end tests against the compiled binary: artifact shapes, exit
//! codes, determinism, and cross-command consistency.

use monosig::BlockWeights;
use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_monosig"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn write(dir: &Path, name: &str, contents: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, contents).unwrap();
    p
}

fn axis_steps(dir: &Path) -> PathBuf {
    write(
        dir,
        "axis_steps.json",
        r#"{"dim": 2, "segments": [[0.5, 0.0], [0.0, 0.5]]}"#,
    )
}

fn diagonal(dir: &Path) -> PathBuf {
    write(dir, "diagonal.json", r#"{"dim": 2, "segments": [[0.5, 0.5]]}"#)
}

fn curve_poly(dir: &Path) -> PathBuf {
    write(
        dir,
        "curve.json",
        r#"{"kind": "poly", "coeffs": [[0, 1], [0, 0, 1]]}"#,
    )
}

/// Sign the (t, t^2) curve at mesh 0.01 and return the signature file.
fn signed_curve(dir: &Path, depth: usize) -> PathBuf {
    let poly = curve_poly(dir);
    let sig = dir.join(format!("sig{depth}.json"));
    let out = run(&[
        "sign",
        "--poly",
        poly.to_str().unwrap(),
        "--mesh",
        "0.01",
        "--depth",
        &depth.to_string(),
        "--out",
        sig.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    sig
}

/// Data rows of a CSV artifact, comments skipped, header checked.
fn csv_rows(path: &Path, header: &str) -> Vec<Vec<String>> {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    assert_eq!(lines.next().unwrap(), header);
    lines
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn sign_writes_exact_levels_for_the_axis_step_path() {
    let dir = tempfile::tempdir().unwrap();
    let path = axis_steps(dir.path());
    let sig = dir.path().join("sig.json");
    let out = run(&[
        "sign",
        "--path",
        path.to_str().unwrap(),
        "--depth",
        "2",
        "--out",
        sig.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("level 1 (endpoint): (0.500000, 0.500000)"));
    let value: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&sig).unwrap()).unwrap();
    assert_eq!(value["levels"][0], serde_json::json!([1.0]));
    assert_eq!(value["levels"][1], serde_json::json!([0.5, 0.5]));
    assert_eq!(value["levels"][2], serde_json::json!([0.125, 0.25, 0.0, 0.125]));
    assert_eq!(value["meta"]["command"], "sign");
    assert!(value["meta"]["inputs"][0]["sha256"].is_string());
}

#[test]
fn sign_supports_depth_zero() {
    let dir = tempfile::tempdir().unwrap();
    let path = diagonal(dir.path());
    let sig = dir.path().join("sig0.json");
    let out = run(&[
        "sign",
        "--path",
        path.to_str().unwrap(),
        "--depth",
        "0",
        "--out",
        sig.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let value: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&sig).unwrap()).unwrap();
    assert_eq!(value["levels"], serde_json::json!([[1.0]]));
}

#[test]
fn invert_reproduces_the_two_block_table_within_tolerance() {
    let dir = tempfile::tempdir().unwrap();
    let sig = signed_curve(dir.path(), 8);
    let csv = dir.path().join("table.csv");
    let out = run(&[
        "invert",
        "--sig",
        sig.to_str().unwrap(),
        "--k",
        "2",
        "--n",
        "4",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let expected = [
        [2.64e-2, 1.51e-1, 3.35e-1, 3.46e-1, 1.42e-1],
        [1.37e-1, 3.51e-1, 3.40e-1, 1.48e-1, 2.44e-2],
    ];
    let rows = csv_rows(&csv, "j,m,weight");
    assert_eq!(rows.len(), 10);
    for row in rows {
        let j: usize = row[0].parse().unwrap();
        let m: usize = row[1].parse().unwrap();
        let w: f64 = row[2].parse().unwrap();
        assert!(
            (w - expected[j - 1][m]).abs() <= 1e-2,
            "block {j} count {m}: {w}"
        );
    }
}

#[test]
fn invert_marginals_are_refinement_consistent() {
    let dir = tempfile::tempdir().unwrap();
    let sig = signed_curve(dir.path(), 8);
    let coarse = dir.path().join("b44.json");
    let fine = dir.path().join("b2222.json");
    for (partition, file) in [("4,4", &coarse), ("2,2,2,2", &fine)] {
        let out = run(&[
            "invert",
            "--sig",
            sig.to_str().unwrap(),
            "--partition",
            partition,
            "--blocks",
            file.to_str().unwrap(),
        ]);
        assert!(out.status.success());
    }
    let coarse: BlockWeights =
        serde_json::from_str(&std::fs::read_to_string(&coarse).unwrap()).unwrap();
    let fine: BlockWeights =
        serde_json::from_str(&std::fs::read_to_string(&fine).unwrap()).unwrap();
    // merging adjacent pairs of the fine blocks must reproduce the coarse
    // joint weights exactly (same level, coarser aggregation)
    let mut merged: HashMap<Vec<Vec<usize>>, f64> = HashMap::new();
    for (counts, w) in fine.iter() {
        let key: Vec<Vec<usize>> = counts
            .chunks(2)
            .map(|pair| {
                let mut sum = pair[0].clone();
                for (s, v) in sum.iter_mut().zip(&pair[1]) {
                    *s += v;
                }
                sum
            })
            .collect();
        *merged.entry(key).or_insert(0.0) += w;
    }
    for (counts, w) in coarse.iter() {
        let got = merged.remove(&counts).unwrap_or(0.0);
        assert!(
            (got - w).abs() <= 1e-12,
            "profile {counts:?}: merged {got} vs coarse {w}"
        );
    }
    for (key, leftover) in merged {
        assert!(leftover.abs() <= 1e-15, "stray profile {key:?}: {leftover}");
    }
}

#[test]
fn sample_is_byte_identical_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let sig = signed_curve(dir.path(), 6);
    let mut outputs = Vec::new();
    for name in ["a.json", "b.json"] {
        let file = dir.path().join(name);
        let out = run(&[
            "sample",
            "--sig",
            sig.to_str().unwrap(),
            "--depth",
            "6",
            "--trials",
            "2000",
            "--seed",
            "42",
            "--out",
            file.to_str().unwrap(),
        ]);
        assert!(out.status.success());
        outputs.push(std::fs::read(&file).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    let report: serde_json::Value = serde_json::from_slice(&outputs[0]).unwrap();
    assert_eq!(report["algorithm"], "chacha12-u53");
    assert_eq!(report["words"].as_array().unwrap().len(), 2000);
    assert_eq!(report["meta"]["seed"], 42);
    let dev = report["max_marginal_deviation"].as_f64().unwrap();
    assert!(dev < 0.05, "marginal deviation {dev}");
}

#[test]
fn rate_is_zero_on_the_reference_and_flags_endpoint_violations() {
    let dir = tempfile::tempdir().unwrap();
    let diag = diagonal(dir.path());
    let out = run(&[
        "rate",
        "--path",
        diag.to_str().unwrap(),
        "--candidate",
        diag.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("rate_W: 0.000000000000e0"));
    let short = write(
        dir.path(),
        "short.json",
        r#"{"dim": 2, "grid": [0.0, 1.0], "segments": [[0.5, 0.1]]}"#,
    );
    let out = run(&[
        "rate",
        "--path",
        diag.to_str().unwrap(),
        "--candidate",
        short.to_str().unwrap(),
        "--out",
        dir.path().join("rate.json").to_str().unwrap(),
    ]);
    assert!(out.status.success(), "infeasible candidates still report");
    assert!(stdout(&out).contains("rate_W: +inf (A^d_1 endpoint)"));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("rate.json")).unwrap())
            .unwrap();
    assert!(report["rate_w"]["value"].is_null());
    assert_eq!(report["rate_w"]["infinite"], true);
    assert_eq!(report["rate_w"]["feasible"], false);
}

#[test]
fn rate_evaluates_the_joint_functional_with_a_time_change() {
    let dir = tempfile::tempdir().unwrap();
    let diag = diagonal(dir.path());
    let axis = write(
        dir.path(),
        "axis.json",
        r#"{"dim": 2, "grid": [0.0, 1.0], "segments": [[1.0, 0.0]]}"#,
    );
    let xi = write(
        dir.path(),
        "xi.json",
        r#"{"dim": 1, "grid": [0.0, 1.0], "segments": [[1.0]]}"#,
    );
    let out = run(&[
        "rate",
        "--path",
        diag.to_str().unwrap(),
        "--candidate",
        axis.to_str().unwrap(),
        "--time-change",
        xi.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    // identity time change: the joint rate reduces to the path rate log 2
    assert!(text.contains("rate_W: 6.931471805599e-1"), "{text}");
    assert!(text.contains("rate_XT: 6.931471805599e-1"), "{text}");
}

#[test]
fn simulate_reports_tv_distance_and_threshold_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let path = axis_steps(dir.path());
    let report_file = dir.path().join("report.json");
    let out = run(&[
        "simulate",
        "--path",
        path.to_str().unwrap(),
        "--depth",
        "2",
        "--trials",
        "20000",
        "--seed",
        "11",
        "--threshold",
        "0.05",
        "--out",
        report_file.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("PASS"));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report_file).unwrap()).unwrap();
    assert_eq!(report["trials"], 20000);
    assert_eq!(report["seed"], 11);
    assert_eq!(report["algorithm"], "chacha12-u53");
    assert_eq!(report["pass"], true);
    let tv = report["tv_distance"].as_f64().unwrap();
    assert!(tv < 0.05, "tv {tv}");
}

#[test]
fn decay_matches_log_two_on_the_diagonal() {
    let dir = tempfile::tempdir().unwrap();
    let diag = diagonal(dir.path());
    let csv = dir.path().join("decay.csv");
    let out = run(&[
        "decay",
        "--path",
        diag.to_str().unwrap(),
        "--event",
        "all-e1",
        "--max-n",
        "8",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let rows = csv_rows(&csv, "N,probability,decay_rate");
    assert_eq!(rows.len(), 8);
    for (i, row) in rows.iter().enumerate() {
        assert_eq!(row[0], (i + 1).to_string());
        assert_eq!(row[2], "6.93147e-1");
    }
    assert_eq!(rows[1][1], "2.50000e-1");
}

#[test]
fn exit_codes_follow_the_contract() {
    let dir = tempfile::tempdir().unwrap();
    // 2: malformed input
    let bad = write(dir.path(), "bad.json", r#"{"dim": 2, "segments": [[0.5"#);
    let out = run(&["sign", "--path", bad.to_str().unwrap(), "--depth", "2"]);
    assert_eq!(out.status.code(), Some(2));
    // 2: missing file
    let out = run(&["sign", "--path", "/nonexistent.json", "--depth", "2"]);
    assert_eq!(out.status.code(), Some(2));
    // 3: well-formed but non-monotone
    let neg = write(
        dir.path(),
        "neg.json",
        r#"{"dim": 2, "segments": [[0.5, -0.1]]}"#,
    );
    let out = run(&["sign", "--path", neg.to_str().unwrap(), "--depth", "2"]);
    assert_eq!(out.status.code(), Some(3));
    // 4: signature lacks the requested level
    let sig = signed_curve(dir.path(), 4);
    let out = run(&[
        "invert",
        "--sig",
        sig.to_str().unwrap(),
        "--k",
        "4",
        "--n",
        "4",
    ]);
    assert_eq!(out.status.code(), Some(4));
    // 4: depth beyond the cap
    let diag = diagonal(dir.path());
    let out = run(&["sign", "--path", diag.to_str().unwrap(), "--depth", "25"]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn invert_writes_an_overlay_figure() {
    let dir = tempfile::tempdir().unwrap();
    let sig = signed_curve(dir.path(), 6);
    let truth = curve_to_path_file(dir.path());
    let svg = dir.path().join("overlay.svg");
    let out = run(&[
        "invert",
        "--sig",
        sig.to_str().unwrap(),
        "--partition",
        "3,3",
        "--svg",
        svg.to_str().unwrap(),
        "--truth",
        truth.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&svg).unwrap();
    assert!(text.starts_with("<svg "));
    assert_eq!(text.matches("<polyline").count(), 2);
    assert!(text.contains("sha256="));
    assert!(!text.contains("date"), "no timestamps in artifacts");
}

/// A concrete monotone path file tracing the same curve as the poly input.
fn curve_to_path_file(dir: &Path) -> PathBuf {
    let mut segments = Vec::new();
    let m = 20usize;
    for i in 0..m {
        let (t0, t1) = (i as f64 / m as f64, (i + 1) as f64 / m as f64);
        segments.push(vec![t1 - t0, t1 * t1 - t0 * t0]);
    }
    let body = serde_json::json!({"dim": 2, "segments": segments});
    write(dir, "truth.json", &body.to_string())
}
