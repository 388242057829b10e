//! End-to-end runs of the `cotlearn` binary on small configs.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const SMALL: &str = r#"{
    "class": {"kind": "dfa", "states": 3, "alphabet": 2, "accept": [2]},
    "target": {"kind": "id", "id": 301},
    "distribution": {"kind": "uniform", "length": 4},
    "trials": 20,
    "m_grid": [1, 2, 4, 8, 16]
}"#;

fn with_fields(base: &str, extra: &[(&str, Value)]) -> String {
    let mut v: Value = serde_json::from_str(base).unwrap();
    for (k, x) in extra {
        v[*k] = x.clone();
    }
    v.to_string()
}

fn run(dir: &TempDir, sub: &str, config: &str, args: &[&str]) -> Output {
    let cfg = dir.path().join("input.json");
    fs::write(&cfg, config).unwrap();
    let out = dir.path().join("out");
    Command::new(env!("CARGO_BIN_EXE_cotlearn"))
        .arg(sub)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .args(args)
        .output()
        .unwrap()
}

fn read(dir: &TempDir, name: &str) -> String {
    fs::read_to_string(dir.path().join("out").join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn header(text: &str) -> &str {
    text.lines().next().unwrap()
}

fn assert_ok(o: &Output) {
    assert!(
        o.status.success(),
        "status {:?}\nstderr: {}",
        o.status,
        String::from_utf8_lossy(&o.stderr)
    );
}

#[test]
fn info_curve_writes_tables_and_summary() {
    let dir = TempDir::new().unwrap();
    let o = run(&dir, "info-curve", SMALL, &[]);
    assert_ok(&o);
    assert_eq!(
        header(&read(&dir, "pairwise.csv")),
        "hypothesis_id,d_ete,joint_agreement,rel_info"
    );
    assert_eq!(read(&dir, "pairwise.csv").lines().count(), 1 + 729);
    assert_eq!(header(&read(&dir, "info_curve.csv")), "epsilon,info,ratio_to_eps_plus");
    let summary: Value = serde_json::from_str(&read(&dir, "info_curve.json")).unwrap();
    assert_eq!(summary["cardinality"], 729);
    assert_eq!(summary["target_id"], 301);
    let copied: Value = serde_json::from_str(&read(&dir, "config.json")).unwrap();
    assert_eq!(copied["trials"], 20);
}

#[test]
fn monte_carlo_mode_skips_pairwise_table() {
    let dir = TempDir::new().unwrap();
    let cfg = with_fields(SMALL, &[("mc_samples", 5000.into())]);
    assert_ok(&run(&dir, "info-curve", &cfg, &["--mode", "mc"]));
    assert!(!dir.path().join("out/pairwise.csv").exists());
    assert!(read(&dir, "info_curve.csv").lines().count() > 1);
}

#[test]
fn learning_outputs_and_overrides() {
    let dir = TempDir::new().unwrap();
    assert_ok(&run(
        &dir,
        "sample-complexity",
        SMALL,
        &["--trials", "7", "--seed", "3"],
    ));
    let learning = read(&dir, "learning.csv");
    assert_eq!(header(&learning), "rule,m,trial,risk,set_size");
    // two default rules, five grid points, seven trials
    assert_eq!(learning.lines().count(), 1 + 2 * 5 * 7);
    assert_eq!(header(&read(&dir, "zero_error.csv")), "rule,m,fraction_zero");
    assert_eq!(header(&read(&dir, "sample_complexity.csv")), "rule,epsilon,m_required");
    let report: Value = serde_json::from_str(&read(&dir, "learn_report.json")).unwrap();
    assert_eq!(report["records"], 70);

    let plain = TempDir::new().unwrap();
    assert_ok(&run(&plain, "learn", SMALL, &[]));
    assert!(!plain.path().join("out/sample_complexity.csv").exists());
}

#[test]
fn worker_count_does_not_change_outputs() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    assert_ok(&run(&a, "learn", SMALL, &["--workers", "1"]));
    assert_ok(&run(&b, "learn", SMALL, &["--workers", "3"]));
    assert_eq!(read(&a, "learning.csv"), read(&b, "learning.csv"));
    assert_eq!(read(&a, "zero_error.csv"), read(&b, "zero_error.csv"));
}

#[test]
fn sweeps_and_transfer() {
    let dir = TempDir::new().unwrap();
    let cfg = with_fields(
        SMALL,
        &[("sweep", serde_json::json!({"kind": "length", "lengths": [2, 3, 4]}))],
    );
    assert_ok(&run(&dir, "info-sweep", &cfg, &[]));
    let summary = read(&dir, "info_sweep_summary.csv");
    assert_eq!(
        header(&summary),
        "sweep,value,epsilon_star,info_at_zero_plus,ratio_at_zero"
    );
    assert_eq!(summary.lines().count(), 4);
    assert_eq!(
        header(&read(&dir, "info_sweep.csv")),
        "sweep,value,epsilon,info,ratio_to_eps_plus"
    );

    let dir = TempDir::new().unwrap();
    let cfg = with_fields(
        SMALL,
        &[(
            "sweep",
            serde_json::json!({"kind": "transfer", "train_length": 4, "test_lengths": [4, 6]}),
        )],
    );
    assert_ok(&run(&dir, "transfer", &cfg, &[]));
    assert_eq!(read(&dir, "transfer_summary.csv").lines().count(), 3);

    // a transfer sweep is rejected by info-sweep
    let dir = TempDir::new().unwrap();
    assert_eq!(run(&dir, "info-sweep", &cfg, &[]).status.code(), Some(2));
}

#[test]
fn bounds_table_lists_each_family() {
    let dir = TempDir::new().unwrap();
    let cfg = with_fields(
        SMALL,
        &[("channel", serde_json::json!({"error_rate": 0.1, "outcome_count": 48}))],
    );
    assert_ok(&run(&dir, "bounds", &cfg, &[]));
    let csv = read(&dir, "bounds.csv");
    for name in [
        "realizable_upper_finite",
        "e2e_upper",
        "two_point_lower",
        "mdl_upper_uniform",
        "mixed_upper",
        "gamma",
        "expected_error_lower",
        "mdl_error_bound_uniform",
        "fano_m_threshold",
    ] {
        assert!(
            csv.lines().any(|l| l.starts_with(&format!("{name},"))),
            "missing {name}"
        );
    }
    let json: Value = serde_json::from_str(&read(&dir, "bounds.json")).unwrap();
    assert_eq!(json.as_array().unwrap().len(), csv.lines().count() - 1);
}

#[test]
fn validate_passes_and_reports() {
    let dir = TempDir::new().unwrap();
    let o = run(&dir, "validate", "{}", &[]);
    assert_ok(&o);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.lines().all(|l| l.starts_with("PASS ")));
    let checks: Value = serde_json::from_str(&read(&dir, "validate.json")).unwrap();
    assert!(checks.as_array().unwrap().iter().all(|c| c["passed"] == true));
}

#[test]
fn config_errors_exit_with_code_2() {
    let dir = TempDir::new().unwrap();
    for bad in [
        "{not json",
        r#"{"unknown_field": 1}"#,
        r#"{"trials": 0}"#,
        r#"{"m_grid": [4, 2]}"#,
        r#"{"class": {"kind": "dfa", "states": 3, "alphabet": 2, "accept": [7]}}"#,
    ] {
        let o = run(&dir, "learn", bad, &[]);
        assert_eq!(
            o.status.code(),
            Some(2),
            "{bad}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
        assert!(String::from_utf8_lossy(&o.stderr).contains("error"));
    }
    let missing = Command::new(env!("CARGO_BIN_EXE_cotlearn"))
        .args(["info-curve", "--config"])
        .arg(Path::new("/nonexistent/config.json"))
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn exact_budget_exit_code_is_3() {
    let dir = TempDir::new().unwrap();
    let cfg = with_fields(
        SMALL,
        &[(
            "budget",
            serde_json::json!({"max_evaluations": 100, "max_support": 1000}),
        )],
    );
    let o = run(&dir, "info-curve", &cfg, &[]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}
