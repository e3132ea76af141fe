use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn cygshell(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cygshell")).args(args).current_dir(cwd).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn ok(args: &[&str], cwd: &Path) -> String {
    let o = cygshell(args, cwd);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    stdout(&o)
}

fn code(args: &[&str], cwd: &Path) -> i32 {
    cygshell(args, cwd).status.code().expect("exit code")
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().into_string().unwrap(), fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

const PHI_1PLUSZ: &str =
    r#"{"kind": "product", "polys": [[[1, 0], [1, 0]]], "lambdas": [1], "A": 2, "allow_circle_roots": true}"#;

#[test]
fn count_fixtures() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(ok(&["count", "--x", "1/1", "--method", "brute"], tmp.path()).trim(), "7");
    assert_eq!(ok(&["count", "--x", "1/2", "--method", "fast"], tmp.path()).trim(), "1");
    assert_eq!(ok(&["count", "--x", "2/1", "--both"], tmp.path()).trim(), "69");
    assert_eq!(ok(&["count", "--x", "20/3", "--both"], tmp.path()), ok(&["count", "--x", "40/6"], tmp.path()));
}

#[test]
fn count_rejects_bad_radii_with_code_2() {
    let tmp = tempfile::tempdir().unwrap();
    for x in ["1/0", "0/3", "abc", "3/"] {
        let o = cygshell(&["count", "--x", x], tmp.path());
        assert_eq!(o.status.code(), Some(2), "{x}");
        assert_eq!(String::from_utf8_lossy(&o.stderr).lines().count(), 1, "{x}");
    }
    assert_eq!(code(&["count", "--x", "-1/2"], tmp.path()), 2);
    assert_eq!(code(&["count", "--x", "61/1", "--method", "brute"], tmp.path()), 2);
    assert_eq!(code(&["count"], tmp.path()), 2);
}

#[test]
fn selftest_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = ok(&["selftest"], tmp.path());
    assert!(out.contains(", 0 failed"), "{out}");
    assert!(!out.contains("FAIL"), "{out}");
}

#[test]
fn second_moment_is_one_by_normalisation() {
    let tmp = tempfile::tempdir().unwrap();
    let runs = [
        vec!["moments", "--omega", "inv_log", "--X", "2000", "--samples", "2000", "--j-max", "4", "--mode", "fast"],
        vec!["moments", "--omega", "inv_loglog", "--X", "100", "--samples", "100", "--j-max", "8"],
    ];
    for args in runs {
        let summary: Value = serde_json::from_str(&ok(&args, tmp.path())).unwrap();
        let m2 = summary["moments"]["2"].as_f64().unwrap();
        assert!((m2 - 1.0).abs() <= 1e-12, "{args:?}: moment₂ = {m2}");
        assert_eq!(summary["moments"]["0"].as_f64(), Some(1.0));
        let sigma2 = summary["sigma2"].as_f64().unwrap();
        assert!(sigma2 > 0.0 && sigma2.is_finite());
    }
}

#[test]
fn sample_writes_documented_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    ok(&["sample", "--X", "50", "--samples", "40", "--out", "run"], tmp.path());
    let dir = tmp.path().join("run");
    let samples = fs::read_to_string(dir.join("samples.csv")).unwrap();
    let mut lines = samples.lines();
    assert_eq!(lines.next(), Some("x,omega_x,shell_count,error,normalized"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 40);
    for w in rows.windows(2) {
        assert!(w[0][0] < w[1][0]);
    }
    for r in &rows {
        assert!(50.0 < r[0] && r[0] < 100.0);
        assert!((r[4] - r[3] / (r[0] * r[0])).abs() <= 1e-12 * r[3].abs().max(1.0));
    }
    let dist = fs::read_to_string(dir.join("distribution.csv")).unwrap();
    let sorted: Vec<f64> = dist.lines().skip(1).map(|v| v.parse().unwrap()).collect();
    assert_eq!(sorted.len(), 40);
    assert!(sorted.windows(2).all(|w| w[0] <= w[1]));
    let summary: Value = serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap();
    for key in ["X", "S", "sigma2", "moments", "ks_normal"] {
        assert!(summary.get(key).is_some(), "summary lacks {key}");
    }
    assert!(summary.get("ks_mixture").is_none());
    let hist = fs::read_to_string(dir.join("histogram.csv")).unwrap();
    let total: u64 = hist.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse::<u64>().unwrap()).sum();
    assert_eq!(total, 40);
}

#[test]
fn construction_summary_reports_mixture_distance() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("phi.json"), PHI_1PLUSZ).unwrap();
    let summary: Value =
        serde_json::from_str(&ok(&["moments", "--omega", "phi.json", "--X", "60", "--samples", "30"], tmp.path()))
            .unwrap();
    let ks = summary["ks_mixture"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&ks));
    let predicted4 = summary["predicted_moments"]["4"].as_f64().unwrap();
    assert!((predicted4 - 35.0 / 6.0).abs() < 1e-12, "{predicted4}");
}

#[test]
fn identical_config_gives_identical_bytes() {
    let tmp = tempfile::tempdir().unwrap();
    let args = ["sample", "--X", "80", "--samples", "60", "--seed", "2", "--out", "run"];
    let first_stdout = ok(&args, tmp.path());
    let first = read_dir_sorted(&tmp.path().join("run"));
    let second_stdout = ok(&args, tmp.path());
    let second = read_dir_sorted(&tmp.path().join("run"));
    assert_eq!(first_stdout, second_stdout);
    assert_eq!(first, second);
    assert_eq!(first.len(), 5);
}

#[test]
fn thread_count_does_not_change_results() {
    let tmp = tempfile::tempdir().unwrap();
    let run = |threads: &str, out: &str| {
        ok(
            &["sample", "--threads", threads, "--X", "120", "--samples", "90", "--mode", "fast", "--out", out],
            tmp.path(),
        );
        read_dir_sorted(&tmp.path().join(out)).into_iter().filter(|(name, _)| name != "config.json").collect::<Vec<_>>()
    };
    assert_eq!(run("1", "a"), run("3", "b"));
}

#[test]
fn config_round_trips_through_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = r#"{"omega": {"kind": "exp_neg_sqrt_log", "independent": false}, "X": 64.5, "samples": 25, "Q": 128, "mode": "exact", "j_max": 6, "seed": 4, "out": "first"}"#;
    fs::write(tmp.path().join("cfg.json"), cfg).unwrap();
    ok(&["sample", "--config", "cfg.json"], tmp.path());
    let emitted = fs::read_to_string(tmp.path().join("first/config.json")).unwrap();
    let original: Value = serde_json::from_str(cfg).unwrap();
    let parsed: Value = serde_json::from_str(&emitted).unwrap();
    assert_eq!(parsed, original);
    ok(&["sample", "--config", "first/config.json"], tmp.path());
    assert_eq!(fs::read_to_string(tmp.path().join("first/config.json")).unwrap(), emitted);
}

#[test]
fn malformed_configs_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cases = [
        ("truncated.json", r#"{"omega": {"kind": "inv_log"}, "X": "#),
        ("unknown_kind.json", r#"{"omega": {"kind": "inv_cube"}, "X": 100, "samples": 50}"#),
        ("small_x.json", r#"{"omega": {"kind": "inv_log"}, "X": 9, "samples": 50}"#),
        ("odd_j.json", r#"{"omega": {"kind": "inv_log"}, "X": 100, "samples": 50, "j_max": 5}"#),
        (
            "no_exponent.json",
            r#"{"omega": {"kind": "sum", "polys": [[[1, 0], [0.5, 0]]], "lambdas": [1]}, "X": 100, "samples": 50}"#,
        ),
    ];
    for (name, text) in cases {
        fs::write(tmp.path().join(name), text).unwrap();
        assert_eq!(code(&["sample", "--config", name], tmp.path()), 2, "{name}");
    }
    assert_eq!(code(&["sample", "--config", "missing.json"], tmp.path()), 2);
    assert_eq!(code(&["moments", "--X", "100"], tmp.path()), 2);
}

/// `𝒫(α) = ∫₀¹ exp(−α²/2σ²)/(√(2π)σ) dt` with `σ(t) = 4cos²(πt)/√6`, by composite Simpson.
fn density_1plusz(alpha: f64) -> f64 {
    let n = 200_000;
    let h = 1.0 / n as f64;
    let f = |t: f64| {
        let s = 4.0 * (std::f64::consts::PI * t).cos().powi(2) / 6f64.sqrt();
        if s == 0.0 {
            0.0
        } else {
            (-alpha * alpha / (2.0 * s * s)).exp() / ((2.0 * std::f64::consts::PI).sqrt() * s)
        }
    };
    let mut acc = f(0.0) + f(1.0);
    for i in 1..n {
        acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
    }
    acc * h / 3.0
}

#[test]
fn density_matches_independent_quadrature() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("phi.json"), PHI_1PLUSZ).unwrap();
    let out = ok(&["density", "--spec", "phi.json", "--alpha", "0.5", "-0.5", "1.5", "--quad", "256"], tmp.path());
    let vals: Vec<f64> = out.lines().map(|l| l.parse().unwrap()).collect();
    assert_eq!(vals[0], vals[1]);
    assert!((vals[0] - density_1plusz(0.5)).abs() < 1e-6, "{} vs {}", vals[0], density_1plusz(0.5));
    assert!((vals[2] - density_1plusz(1.5)).abs() < 1e-6, "{} vs {}", vals[2], density_1plusz(1.5));
}

#[test]
fn density_at_zero_diverges_for_a_double_root() {
    // σ vanishes to second order at t = ½, so the rule's value at α = 0 doubles with the node count.
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("phi.json"), PHI_1PLUSZ).unwrap();
    let at = |q: &str| -> f64 {
        ok(&["density", "--spec", "phi.json", "--alpha", "0", "--quad", q], tmp.path()).trim().parse().unwrap()
    };
    let (p64, p128) = (at("64"), at("128"));
    assert!((p128 / p64 - 2.0).abs() < 0.05, "{p64} {p128}");
}

#[test]
fn density_moments_agree_with_exact_values() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("phi.json"), PHI_1PLUSZ).unwrap();
    let out = ok(&["density", "--spec", "phi.json", "--alpha", "1", "--j-max", "4"], tmp.path());
    let report: Value = serde_json::from_str(out.split_once('\n').unwrap().1).unwrap();
    assert_eq!(report["moments"]["4"]["construction"], "70");
    for j in ["0", "2", "4"] {
        let exact = report["moments"][j]["moment"].as_f64().unwrap();
        let quad = report["moments"][j]["quadrature"].as_f64().unwrap();
        assert!((exact - quad).abs() < 1e-8 * exact, "j = {j}: {exact} vs {quad}");
    }
}

#[test]
fn expand_reports_every_grid_point() {
    let tmp = tempfile::tempdir().unwrap();
    let summary: Value =
        serde_json::from_str(&ok(&["expand", "--X", "30", "--samples", "20", "--out", "exp"], tmp.path())).unwrap();
    assert_eq!(summary["cutoff"].as_u64(), Some(900));
    let csv = fs::read_to_string(tmp.path().join("exp/expansion.csv")).unwrap();
    assert_eq!(csv.lines().count(), 21);
    assert!(csv.starts_with("x,omega_x,normalized,main,sawtooth,rhs,residual\n"));
}

#[test]
fn diagnose_emits_json() {
    let tmp = tempfile::tempdir().unwrap();
    let diag: Value =
        serde_json::from_str(&ok(&["diagnose", "--omega", "inv_log", "--X", "500", "--scan", "2000"], tmp.path()))
            .unwrap();
    assert_eq!(diag["X"].as_f64(), Some(500.0));
    assert!(diag["max_omega"].as_f64().unwrap() < 1.0);
    assert_eq!(code(&["diagnose", "--X", "500", "--scan", "10"], tmp.path()), 2);
}
