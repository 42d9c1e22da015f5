//! End-to-end tests of the `dln` binary.

use std::process::{Command, Output};

fn dln(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dln"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn column(csv: &str, name: &str) -> Vec<String> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let idx = header.iter().position(|h| *h == name).unwrap();
    lines
        .map(|l| l.split(',').nth(idx).unwrap().to_string())
        .collect()
}

#[test]
fn midpoint_decay_run() {
    let out = dln(&[
        "run",
        "--problem",
        "decay",
        "--delta",
        "1",
        "--mode",
        "fixed",
        "--k0",
        "0.1",
        "--t-end",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let csv = stdout(&out);
    let err: Vec<String> = column(&csv, "exact_error");
    assert_eq!(err.len(), 10);
    assert!(err[..9].iter().all(String::is_empty));
    // Midpoint on y' = -y is the (1,1) Pade map applied ten times.
    let r: f64 = (1.0 - 0.05) / (1.0 + 0.05);
    let expected = (r.powi(10) - (-1.0f64).exp()).abs();
    let got: f64 = err[9].parse().unwrap();
    assert!((got - expected).abs() < 1e-14, "{got} vs {expected}");
    assert!(got < 1e-3);
    for v in column(&csv, "energy_residual") {
        assert!(v.parse::<f64>().unwrap() <= 1e-12);
    }
}

#[test]
fn quadratic_random_ratio_is_exact() {
    let out = dln(&[
        "run",
        "--problem",
        "quadratic",
        "--delta",
        "0.5",
        "--mode",
        "random-ratio",
        "--seed",
        "7",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let err = column(&stdout(&out), "exact_error");
    let last: f64 = err.last().unwrap().parse().unwrap();
    assert!(last <= 1e-11, "{last}");
}

#[test]
fn unknown_problem_lists_registry() {
    let out = dln(&["run", "--problem", "brusselator"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    for name in dln_core::problem::PROBLEM_NAMES {
        assert!(err.contains(name), "{err}");
    }
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        &["run", "--delta", "1.5"][..],
        &["run", "--ratio-bounds", "2,0.5"],
        &["run", "--k0", "-1"],
        &["run", "--mode", "sideways"],
        &["converge", "--problem", "vanderpol"],
        &["energy-audit", "--problem", "quadratic"],
        &["frobnicate"],
    ] {
        assert_eq!(dln(args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn runtime_failure_exits_one() {
    // Steps far too long for Newton on a stiff oscillator.
    let out = dln(&[
        "run",
        "--problem",
        "vanderpol:50",
        "--k0",
        "2",
        "--t-end",
        "100",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stderr).unwrap().contains("Newton"));

    // A tolerance the controller cannot meet.
    let out = dln(&[
        "run",
        "--problem",
        "vanderpol",
        "--mode",
        "adaptive",
        "--tol-abs",
        "1e-15",
        "--tol-rel",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let paths: Vec<_> = ["a.csv", "b.csv"]
        .iter()
        .map(|f| dir.path().join(f))
        .collect();
    for p in &paths {
        let out = dln(&[
            "run",
            "--problem",
            "nonauto",
            "--mode",
            "random-ratio",
            "--seed",
            "11",
            "--output-path",
            p.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0));
        assert!(out.stdout.is_empty());
    }
    let a = std::fs::read(&paths[0]).unwrap();
    let b = std::fs::read(&paths[1]).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, b);
}

#[test]
fn json_run_output() {
    let out = dln(&[
        "run",
        "--problem",
        "decay",
        "--mode",
        "adaptive",
        "--tol-abs",
        "1e-7",
        "--tol-rel",
        "1e-7",
        "--format",
        "json",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let rows = v["rows"].as_array().unwrap();
    assert!(rows.len() > 5);
    let last_t = rows.last().unwrap()["t"].as_f64().unwrap();
    assert_eq!(last_t, 1.0);
    for r in rows {
        if let Some(e) = r["lte_scalar"].as_f64() {
            assert!(e <= 1.0);
        }
    }
    assert!(v["terminal_error"].as_f64().unwrap() < 1e-4);
}

#[test]
fn converge_reports_second_order() {
    let out = dln(&["converge", "--problem", "decay", "--levels", "5"]);
    assert_eq!(out.status.code(), Some(0));
    let orders = column(&stdout(&out), "observed_order");
    assert_eq!(orders.len(), 5);
    assert!(orders[0].is_empty());
    for o in &orders[1..] {
        let p: f64 = o.parse().unwrap();
        assert!((1.85..=2.15).contains(&p), "{p}");
    }

    let out = dln(&[
        "converge",
        "--problem",
        "decay",
        "--delta",
        "0",
        "--mode",
        "random-ratio",
        "--ratio-bounds",
        "0.5,2",
        "--format",
        "json",
    ]);
    let rows: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    for r in &rows.as_array().unwrap()[1..] {
        let p = r["observed_order"].as_f64().unwrap();
        assert!((1.85..=2.15).contains(&p), "{p}");
    }
}

#[test]
fn converge_flags_roundoff() {
    let out = dln(&["converge", "--problem", "quadratic", "--levels", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let csv = stdout(&out);
    assert!(column(&csv, "at_roundoff").iter().all(|v| v == "1"));
    assert!(column(&csv, "observed_order").iter().all(String::is_empty));
}

#[test]
fn equivalence_examples() {
    let out = dln(&[
        "equivalence",
        "--problem",
        "vanderpol",
        "--delta",
        "0.6666666666666666",
        "--steps",
        "200",
        "--seed",
        "42",
        "--format",
        "json",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["max_discrepancy"].as_f64().unwrap() <= 1e-9);
    assert_eq!(v["passed"], true);

    for (problem, delta) in [("decay", "1"), ("quadratic", "0.3")] {
        let out = dln(&[
            "equivalence",
            "--problem",
            problem,
            "--delta",
            delta,
            "--format",
            "json",
        ]);
        let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        let d = v["max_discrepancy"].as_f64().unwrap();
        assert!(d <= 1e-13, "{problem}: {d}");
    }
}

#[test]
fn energy_audit_on_contractive_problems() {
    for problem in ["decay", "oscillator", "nonauto"] {
        let out = dln(&[
            "energy-audit",
            "--problem",
            problem,
            "--seed",
            "3",
            "--format",
            "json",
        ]);
        assert_eq!(out.status.code(), Some(0), "{problem}");
        let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        assert_eq!(v["g_norm_sq"].as_array().unwrap().len(), 500);
        assert!(v["first_violation"].is_null());
    }
}
