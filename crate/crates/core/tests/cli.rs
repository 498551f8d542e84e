use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use maxent::cli::RunReport;

const EXPONENTIAL: &str = r#"schema = 1
dimension = 1

[support]
shape = "box"
lower = [0.0]
upper = [inf]

[[constraints]]
kind = "power"
exponent = 1
u = 1.0
"#;

const GAUSSIAN: &str = r#"schema = 1
dimension = 1

[support]
shape = "full"

[[constraints]]
kind = "power"
exponent = 2
u = 1.0

[output]
grid = 2000
lower = [-12.0]
upper = [12.0]
"#;

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn maxent(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_maxent"))
        .args(args)
        .args(["--out", dir.to_str().unwrap()])
        .env_remove("MAXENT_SEED")
        .output()
        .unwrap()
}

fn solve(config: &str) -> (tempfile::TempDir, Output) {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "problem.toml", config);
    let out = maxent(&["solve", "--quiet", "--config", cfg.to_str().unwrap()], dir.path());
    (dir, out)
}

fn report(dir: &Path) -> RunReport {
    RunReport::from_json(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn exponential_solve_is_certified() {
    let (dir, out) = solve(EXPONENTIAL);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let r = report(dir.path());
    let sol = r.solution.unwrap();
    assert!((sol.lambda[0] - 1.0).abs() < 1e-3);
    assert!((sol.entropy - 1.0).abs() < 1e-4);
    assert!(r.certificate.unwrap().verdict.is_certified());
    assert_eq!((r.status.as_str(), r.exit_code), ("ok", 0));
    assert_eq!(r.config, EXPONENTIAL);
}

#[test]
fn report_round_trips_byte_for_byte() {
    let (dir, _) = solve(EXPONENTIAL);
    let text = std::fs::read_to_string(dir.path().join("report.json")).unwrap();
    let parsed = RunReport::from_json(&text).unwrap();
    assert_eq!(parsed.to_json(), text);
}

#[test]
fn report_records_budgets_and_seeds() {
    let (dir, _) = solve(EXPONENTIAL);
    let s = report(dir.path()).settings.unwrap();
    assert_eq!(s.certificate_budget.max_evaluations, 4 * s.diagnosis_budget.max_evaluations);
    assert_eq!(s.certificate_budget.seed, s.diagnosis_budget.seed + 1);
    assert_eq!(s.solver_tol, 1e-8);
}

#[test]
fn linear_on_the_line_has_no_route() {
    let cfg = "schema = 1\ndimension = 1\nsupport = { shape = \"full\" }\n[[constraints]]\nkind = \"power\"\nexponent = 1\nu = 1.0\n";
    let (dir, out) = solve(cfg);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("stabilizing constraint"), "{}", stderr(&out));
    let r = report(dir.path());
    assert_eq!(r.status, "no-existence");
    assert!(r.solution.is_none());
    assert!(!dir.path().join("density.csv").exists());
}

#[test]
fn malformed_bound_names_field() {
    let (_, out) = solve(&EXPONENTIAL.replace("u = 1.0", "u = []"));
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("constraints[0].u"), "{}", stderr(&out));
}

#[test]
fn missing_config_is_invalid_input() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(maxent(&["solve"], dir.path()).status.code(), Some(2));
    assert_eq!(maxent(&["solve", "--config", "/nonexistent.toml"], dir.path()).status.code(), Some(2));
    assert_eq!(maxent(&["bogus"], dir.path()).status.code(), Some(2));
}

#[test]
fn iteration_cap_exits_not_converged() {
    let cfg = EXPONENTIAL.replace("u = 1.0", "u = 0.01") + "\n[solver]\nmax_iter = 1\n";
    let (dir, out) = solve(&cfg);
    assert_eq!(out.status.code(), Some(4), "{}", stderr(&out));
    assert_eq!(report(dir.path()).status, "not-converged");
}

fn verify(lambda: &str) -> (tempfile::TempDir, Output) {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "problem.toml", EXPONENTIAL);
    let sol = write(dir.path(), "solution.json", &format!("{{\"lambda\": [{lambda}]}}"));
    let out = maxent(
        &["verify", "--quiet", "--config", cfg.to_str().unwrap(), "--solution", sol.to_str().unwrap()],
        dir.path(),
    );
    (dir, out)
}

#[test]
fn verify_exact_multiplier() {
    let (_, out) = verify("1.0");
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
}

#[test]
fn verify_perturbed_multiplier_reports_slackness() {
    let (dir, out) = verify("1.1");
    assert_eq!(out.status.code(), Some(5));
    let cert = report(dir.path()).certificate.unwrap();
    assert!((cert.slackness_residual.unwrap() - 0.1).abs() < 1e-6);
}

#[test]
fn verify_negative_multiplier_is_invalid() {
    let (_, out) = verify("-0.5");
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_accepts_solve_report() {
    let (dir, _) = solve(EXPONENTIAL);
    let cfg = dir.path().join("problem.toml");
    let rep = dir.path().join("report.json");
    let verify_dir = dir.path().join("verify");
    let out = maxent(
        &["verify", "--quiet", "--config", cfg.to_str().unwrap(), "--solution", rep.to_str().unwrap()],
        &verify_dir,
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
}

#[test]
fn diagnose_reports_route() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "problem.toml", GAUSSIAN);
    let out = maxent(&["diagnose", "--quiet", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let d = report(dir.path()).diagnosis.unwrap();
    assert_eq!(d.route, maxent::certificate::Route::Stabilizing);
}

fn csv_rows(dir: &Path) -> (String, Vec<Vec<f64>>) {
    let text = std::fs::read_to_string(dir.join("density.csv")).unwrap();
    let mut lines = text.split('\n');
    let header = lines.next().unwrap().to_string();
    let rows = lines.filter(|l| !l.is_empty()).map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    (header, rows)
}

#[test]
fn csv_is_normalised_and_nonnegative() {
    for (cfg, width) in [(GAUSSIAN, 24.0 / 2000.0), (EXPONENTIAL, f64::NAN)] {
        let (dir, out) = solve(cfg);
        assert_eq!(out.status.code(), Some(0));
        let (header, rows) = csv_rows(dir.path());
        assert_eq!(header, "x_1,density");
        assert!(rows.iter().all(|r| r[1] >= 0.0));
        let width = if width.is_nan() { rows[1][0] - rows[0][0] } else { width };
        let mass: f64 = rows.iter().map(|r| r[1] * width).sum();
        assert!((mass - 1.0).abs() < 1e-2, "mass {mass}");
    }
}

#[test]
fn csv_rows_stay_inside_support() {
    let cfg = EXPONENTIAL.to_string() + "\n[output]\ngrid = 100\nlower = [-1.0]\nupper = [9.0]\n";
    let (dir, _) = solve(&cfg);
    let (_, rows) = csv_rows(dir.path());
    assert_eq!(rows.len(), 90);
    assert!(rows.iter().all(|r| r[0] >= 0.0));
    let text = std::fs::read_to_string(dir.path().join("density.csv")).unwrap();
    assert!(!text.contains('\r'));
    // 17 significant digits: one before the point, sixteen after
    let first = text.lines().nth(1).unwrap().split(',').next().unwrap();
    let mantissa = first.split('e').next().unwrap();
    assert_eq!(mantissa.len(), 18, "{first}");
    assert!((first.parse::<f64>().unwrap() - 0.05).abs() < 1e-12);
}

#[test]
fn two_dimensional_csv() {
    let cfg = "schema = 1\ndimension = 2\nsupport = { shape = \"full\" }\n[[constraints]]\nkind = \"norm-power\"\nexponent = 2.0\nu = 2.0\n[output]\ngrid = 60\nlower = [-6.0, -6.0]\nupper = [6.0, 6.0]\n";
    let (dir, out) = solve(cfg);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let (header, rows) = csv_rows(dir.path());
    assert_eq!(header, "x_1,x_2,density");
    assert_eq!(rows.len(), 3600);
    let mass: f64 = rows.iter().map(|r| r[2] * 0.04).sum();
    assert!((mass - 1.0).abs() < 1e-2, "mass {mass}");
}

#[test]
fn identical_runs_are_byte_identical() {
    let (a, _) = solve(GAUSSIAN);
    let (b, _) = solve(GAUSSIAN);
    for f in ["report.json", "density.csv"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn seed_variable_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "problem.toml", EXPONENTIAL);
    let out = Command::new(env!("CARGO_BIN_EXE_maxent"))
        .args(["solve", "--quiet", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()])
        .env("MAXENT_SEED", "41")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let s = report(dir.path()).settings.unwrap();
    assert_eq!((s.solver_budget.seed, s.diagnosis_budget.seed, s.certificate_budget.seed), (41, 41, 42));
}

#[test]
fn eval_appends_density() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "problem.toml", EXPONENTIAL);
    let mut child = Command::new(env!("CARGO_BIN_EXE_maxent"))
        .args(["eval", "--config", cfg.to_str().unwrap()])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(b"0\n1.5\n\n-1\n").unwrap();
    let out = child.wait_with_output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let values: Vec<Vec<f64>> = String::from_utf8(out.stdout)
        .unwrap()
        .lines()
        .map(|l| l.split(' ').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(values.len(), 3);
    assert!((values[0][1] - 1.0).abs() < 1e-6);
    assert!((values[1][1] - (-1.5f64).exp()).abs() < 1e-6);
    assert_eq!(values[2][1], 0.0);
}

#[test]
fn eval_rejects_wrong_arity() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "problem.toml", EXPONENTIAL);
    let mut child = Command::new(env!("CARGO_BIN_EXE_maxent"))
        .args(["eval", "--config", cfg.to_str().unwrap()])
        .stdin(Stdio::piped())
        .stdout(Stdio::null())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(b"1 2\n").unwrap();
    assert_eq!(child.wait_with_output().unwrap().status.code(), Some(2));
}

#[test]
fn sample_is_deterministic_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "problem.toml", EXPONENTIAL);
    let run = |seed: &str| {
        maxent(&["sample", "--config", cfg.to_str().unwrap(), "--n", "500", "--seed", seed], dir.path()).stdout
    };
    let a = run("3");
    assert_eq!(a, run("3"));
    assert_ne!(a, run("4"));
    let xs: Vec<f64> = String::from_utf8(a).unwrap().lines().map(|l| l.parse().unwrap()).collect();
    assert_eq!(xs.len(), 500);
    assert!(xs.iter().all(|x| *x >= 0.0));
    let mean = xs.iter().sum::<f64>() / 500.0;
    assert!((mean - 1.0).abs() < 0.15, "{mean}");
}

#[test]
fn selftest_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = maxent(&["selftest"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let table = String::from_utf8(out.stdout).unwrap();
    assert_eq!(table.matches("PASS").count(), 15);
}

#[test]
fn selftest_with_loose_solver_fails_grid_check() {
    let dir = tempfile::tempdir().unwrap();
    let out = maxent(&["selftest", "--solver-tol", "0.1"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("/ grid:"), "{}", stderr(&out));
}

#[test]
fn selftest_with_small_budget_widens_tolerances() {
    let dir = tempfile::tempdir().unwrap();
    let out = maxent(&["selftest", "--budget", "1000"], dir.path());
    assert!(stderr(&out).contains("widened"), "{}", stderr(&out));
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
}
