use serde_json::Value;
use std::path::Path;
use std::process::{Command, Output};

fn ves(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ves"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}):\n{}\nstderr:\n{}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,y,re,im,mask"));
    lines.map(|l| l.split(',').map(String::from).collect()).collect()
}

#[test]
fn verify_default_grid_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = ves(&["verify", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&out);
    assert_eq!(report["passed"], true);
    let saved: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(saved, report);
    for c in 1..=10u64 {
        assert!(
            report["checks"].as_array().unwrap().iter().any(|k| k["criterion"] == c),
            "no check for criterion {c}"
        );
    }
}

#[test]
fn verify_fault_fails_named_checks() {
    let out = ves(&[
        "verify",
        "--grid=-0.5,2,-1,1,101,81",
        "--deltas",
        "1,0.1",
        "--fault",
        "corrupt-phi-factorization",
        "--format",
        "table",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let table = String::from_utf8_lossy(&out.stdout);
    let failed: Vec<&str> = table.lines().filter(|l| l.ends_with("FAIL")).collect();
    assert!(!failed.is_empty());
    assert!(failed.iter().all(|l| l.starts_with("phi_factored_vs_")), "{failed:?}");
    assert!(table.contains("overall: FAIL"));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(ves(&["--order", "3", "verify"]).status.code(), Some(1));
    assert_eq!(ves(&["diagnose", "--structure", "nope"]).status.code(), Some(1));
    assert_eq!(ves(&["--grid", "0,1,0,1,5", "verify"]).status.code(), Some(1));
    assert_eq!(ves(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(ves(&["--help"]).status.code(), Some(0));
}

#[test]
fn diagnose_reports_rigidity_verdicts() {
    let rigid = json(&ves(&["diagnose", "--structure", "delta", "--params", "delta=0.1", "--grid", "0,1,-1,1,41,41"]));
    assert_eq!(rigid["rigid_verdict"], true);
    assert!(rigid["max_rho_T"].as_f64().unwrap() < 1e-10);
    assert_eq!(rigid["tolerance"].as_f64().unwrap(), 0.025);

    // λ = x + 2i: T = 1, Im λ = 2, so ρ_T = 1/4 everywhere.
    let out = ves(&["diagnose", "--structure", "custom", "--lambda", "x + 2*1i", "--grid=-1,1,-1,1,41,41"]);
    assert_eq!(out.status.code(), Some(0));
    let shear = json(&out);
    assert_eq!(shear["rigid_verdict"], false);
    assert!((shear["max_rho_T"].as_f64().unwrap() - 0.25).abs() < 1e-12);
    assert_eq!(shear["self_dilatation"]["rigid_verdict"], false);
}

#[test]
fn uniformize_writes_chart_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = ves(&[
        "uniformize",
        "--structure",
        "delta",
        "--params",
        "delta=0.5",
        "--grid",
        "0,1,-1,1,21,11",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&out);
    assert_eq!(report["injectivity"]["verdict"], "injective_on_sample");
    // det = δ/(1+x)^3 is smallest at x = 1.
    assert!((report["jacobian"]["min_det"].as_f64().unwrap() - 0.5 / 8.0).abs() < 1e-12);
    for f in ["p.csv", "q.csv", "phi.csv", "jacdet.csv", "lambda.csv", "report.json"] {
        assert!(dir.path().join(f).is_file(), "{f} missing");
    }
    // p = y/(1+x), q = −δx/(1+x).
    for row in csv_rows(&dir.path().join("p.csv")) {
        let (x, y, p): (f64, f64, f64) = (row[0].parse().unwrap(), row[1].parse().unwrap(), row[2].parse().unwrap());
        assert!((p - y / (1.0 + x)).abs() < 1e-14);
        assert_eq!(row[3].parse::<f64>().unwrap(), 0.0);
    }
    for row in csv_rows(&dir.path().join("q.csv")) {
        let (x, q): (f64, f64) = (row[0].parse().unwrap(), row[2].parse().unwrap());
        assert!((q + 0.5 * x / (1.0 + x)).abs() < 1e-14);
    }
}

#[test]
fn invert_recovers_closed_form_point() {
    // ξ(1.5, 0.5) for δ = 0.5: p = 0.2, q = −0.3.
    let r = json(&ves(&["invert", "--structure", "delta", "--params", "delta=0.5", "--target", "0.2,-0.3"]));
    assert!((r["x"].as_f64().unwrap() - 1.5).abs() < 1e-12);
    assert!((r["y"].as_f64().unwrap() - 0.5).abs() < 1e-12);
}

#[test]
fn burgers_reports_mask_reasons_and_certifies() {
    let dir = tempfile::tempdir().unwrap();
    let out = ves(&[
        "burgers",
        "--seed",
        "delta",
        "--params",
        "delta=0.1",
        "--grid=-1.5,2,-1,1,71,21",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = json(&out);
    assert_eq!(r["self_certified"], true);
    // J = 1 + x vanishes at x = −1: that column fails, everything left of it is cut off.
    assert_eq!(r["mask_reasons"]["near_shock"], 21);
    assert_eq!(r["mask_reasons"]["beyond_failure"], 10 * 21);
    let masked = csv_rows(&dir.path().join("lambda.csv"))
        .into_iter()
        .filter(|row| row[4] == "0")
        .count();
    assert_eq!(masked, 11 * 21);
    assert!(dir.path().join("J.csv").is_file());
}

#[test]
fn reduce_refuses_non_rigid_and_reduces_rigid() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(
        &bad,
        r#"{"structure": {"kind": "named", "name": "custom", "params": {"lambda": "x + 2*1i"}},
            "grid": "0,1,-1,1,21,21", "a": "1"}"#,
    )
    .unwrap();
    assert_eq!(ves(&["reduce", "--problem", bad.to_str().unwrap()]).status.code(), Some(2));

    let good = dir.path().join("good.json");
    std::fs::write(
        &good,
        r#"{"structure": {"kind": "named", "name": "delta", "params": {"delta": "0.5"}},
            "grid": "0,1,-1,1,21,21", "a": "x*y", "b": 0.5}"#,
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = ves(&[
        "reduce",
        "--problem",
        good.to_str().unwrap(),
        "--check",
        "holomorphic:w^2",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = json(&out);
    assert!(r["division_residual"].as_f64().unwrap() < 1e-13);
    assert_eq!(r["coefficient_bound"]["holds"], true);
    assert!(r["check"]["reduced_residual"]["max"].as_f64().unwrap().is_finite());
    for f in ["Aprime.csv", "Bprime.csv", "Fprime.csv", "report.json"] {
        assert!(out_dir.join(f).is_file(), "{f} missing");
    }
}

#[test]
fn identical_runs_give_identical_files() {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        let out = ves(&[
            "uniformize",
            "--seed",
            "1i*exp(w)",
            "--grid=-0.5,0.5,-0.5,0.5,21,21",
            "--out",
            d.path().to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for f in ["p.csv", "q.csv", "phi.csv", "jacdet.csv", "lambda.csv", "report.json"] {
        let a = std::fs::read(dirs[0].path().join(f)).unwrap();
        let b = std::fs::read(dirs[1].path().join(f)).unwrap();
        assert!(a == b, "{f} differs between runs");
    }
}
