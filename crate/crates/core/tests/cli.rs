use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_expert-auction"))
}

fn manifest() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

fn scenario(name: &str) -> PathBuf {
    manifest().join("scenarios").join(name)
}

fn run(args: &[&str], scenario_file: &Path) -> Output {
    let mut cmd = bin();
    cmd.arg(args[0]).arg("--scenario").arg(scenario_file).args(&args[1..]);
    cmd.output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

#[test]
fn every_shipped_scenario_verifies() {
    for entry in std::fs::read_dir(manifest().join("scenarios")).unwrap() {
        let path = entry.unwrap().path();
        let out = run(&["verify"], &path);
        assert_eq!(out.status.code(), Some(0), "{}:\n{}", path.display(), stdout(&out));
        assert_eq!(stdout(&out).lines().filter(|l| l.contains("FAIL")).count(), 0);
    }
}

#[test]
fn nonconvex_curve_fails_convexity() {
    let out = run(&["verify", "--suite", "convexity"], &manifest().join("tests/fixtures/nonconvex.json"));
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).starts_with("convexity   FAIL"), "{}", stdout(&out));
}

#[test]
fn single_suite_flag() {
    let out = run(&["verify", "--suite", "properness"], &scenario("two_experts.json"));
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 1, "{text}");
    assert!(text.starts_with("properness"));
}

#[test]
fn usage_errors_exit_two() {
    let out = run(&["auction", "--samples", "0"], &scenario("two_experts.json"));
    assert_eq!(out.status.code(), Some(2));
    let out = bin().args(["auction", "--scenario", "/nonexistent/scenario.json"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = bin().arg("frobnicate").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn invalid_scenario_reports_location() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(scenario("two_experts.json")).unwrap();
    let broken = text.replacen("\"weight\": 0.5", "\"weight\": 0.7", 1);
    let path = dir.path().join("broken.json");
    std::fs::write(&path, broken).unwrap();
    let out = run(&["verify"], &path);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("experts[0].technologies[0]"), "{err}");
}

#[test]
fn auction_reports_prediction_and_writes_runs() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("runs.csv");
    let out = run(
        &["auction", "--samples", "500", "--out", csv_path.to_str().unwrap()],
        &scenario("two_experts.json"),
    );
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("winner B"), "{text}");
    assert!(text.contains("predicted principal utility: 0.120000"), "{text}");
    let (header, rows) = read_csv(&csv_path);
    assert_eq!(header[0], "run");
    assert_eq!(rows.len(), 500);
}

#[test]
fn seed_flag_changes_runs() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let s = scenario("two_experts.json");
    run(&["auction", "--samples", "200", "--seed", "1", "--out", a.to_str().unwrap()], &s);
    run(&["auction", "--samples", "200", "--seed", "2", "--out", b.to_str().unwrap()], &s);
    assert_ne!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
}

#[test]
fn plot_curves_shift_by_beta() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("curves.csv");
    let out = run(&["plot", "--what", "curves", "--out", path.to_str().unwrap()], &scenario("two_experts.json"));
    assert_eq!(out.status.code(), Some(0));
    let (header, rows) = read_csv(&path);
    assert_eq!(header, ["rho", "P_0", "P_0.1", "P_0.2"]);
    assert_eq!(rows.len(), 101);
    for row in rows {
        let p0: f64 = row[1].parse().unwrap();
        let p1: f64 = row[2].parse().unwrap();
        assert!((p0 - p1 - 0.1).abs() < 1e-12);
    }
}

#[test]
fn plot_maxrisk_allowed_band() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("maxrisk.csv");
    let out = run(
        &["plot", "--what", "maxrisk", "--phi-e", "0.5", "--out", path.to_str().unwrap()],
        &scenario("two_experts.json"),
    );
    assert_eq!(out.status.code(), Some(0));
    let (_, rows) = read_csv(&path);
    let (lo, hi) = (1.0 - 0.5f64.sqrt(), 0.5f64.sqrt());
    for row in rows {
        let rho: f64 = row[0].parse().unwrap();
        let allowed = row[3] == "true";
        if !(lo - 0.01..=hi + 0.01).contains(&rho) {
            assert!(!allowed, "rho {rho}");
        }
        if (lo + 0.01..=hi - 0.01).contains(&rho) {
            assert!(allowed, "rho {rho}");
        }
    }
}

#[test]
fn plot_payments_tangent_endpoints() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("payments.csv");
    let out = run(
        &["plot", "--what", "payments", "--report", "0.9", "--out", path.to_str().unwrap()],
        &scenario("two_experts.json"),
    );
    assert_eq!(out.status.code(), Some(0));
    let (header, rows) = read_csv(&path);
    assert_eq!(header, ["rho", "tangent", "curve"]);
    let first: f64 = rows[0][1].parse().unwrap();
    let last: f64 = rows[100][1].parse().unwrap();
    assert!((first + 1.12).abs() < 1e-12, "{first}");
    assert!((last - 0.48).abs() < 1e-12, "{last}");
}

#[test]
fn plot_rejects_three_outcomes() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("x.csv");
    let out = run(&["plot", "--what", "curves", "--out", path.to_str().unwrap()], &scenario("three_outcomes.json"));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn contract_prints_vertex_payments() {
    let out = run(&["contract", "--report", "0.9,0.1"], &scenario("two_experts.json"));
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("payment[0]: 0.48"), "{text}");
    assert!(text.contains("payment[1]: -1.12"), "{text}");
}

#[test]
fn maxrisk_prints_bounds_and_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.csv");
    let out = run(
        &["maxrisk", "--phi-e", "0.5", "--beta-max", "0.5", "--grid-step", "0.1", "--out", path.to_str().unwrap()],
        &scenario("two_experts.json"),
    );
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("[0.29289322, 0.70710678]"), "{}", stdout(&out));
    let (header, rows) = read_csv(&path);
    assert_eq!(header, ["beta", "rho_min", "rho_max"]);
    assert_eq!(rows.len(), 6);
    // β = 0.5 leaves only the prior admissible
    let hi: f64 = rows[5][2].parse().unwrap();
    assert!((hi - 0.5).abs() < 1e-9);
}
