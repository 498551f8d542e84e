use std::io::{BufRead, Write};
use std::path::Path;
use std::time::Instant;

use serde::Deserialize;

use super::config::{parse_config, ProblemConfig};
use super::report::{density_csv, full_precision, RunReport, Settings};
use super::{Cli, Command, ExitCode};
use crate::certificate::{certify, diagnose_constraints, ExistenceDiagnosis, Route, Tolerances};
use crate::dual::{active_set, density_at, sample, solve, DualSolution, SolveOptions};
use crate::error::{Error, Result};
use crate::measurements::{MomentProblem, Point};
use crate::oracle::{analytic_fixtures, grid_solve};
use crate::quadrature::{family_integrals, IntegrationBudget};

/// Cells per axis of the density CSV when the configuration names none.
fn default_grid(dimension: usize) -> usize {
    match dimension {
        1 => 1000,
        2 => 200,
        3 => 40,
        _ => 8,
    }
}

const SELFTEST_GRID_CELLS: usize = 4000;
const SELFTEST_LAMBDA_TOL: f64 = 1e-3;
const SELFTEST_ENTROPY_TOL: f64 = 1e-4;
const SELFTEST_TV_TOL: f64 = 1e-2;
const SELFTEST_GRID_ENTROPY_TOL: f64 = 2e-3;
/// Tolerance widening applied when the budget is below the default.
const SELFTEST_WIDENING: f64 = 10.0;

type Failure = (ExitCode, String);

fn fail(e: Error) -> Failure {
    (ExitCode::for_error(&e), e.to_string())
}

/// Multipliers read from a file; `alpha` is recomputed when absent.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct SolutionFile {
    pub lambda: Vec<f64>,
    pub alpha: Option<f64>,
    /// Claimed entropy; `alpha + sum lambda_g E[phi_g]` when absent.
    pub entropy: Option<f64>,
}

impl SolutionFile {
    /// Builds the solution record the certificate is checked against.
    pub fn into_solution(self, problem: &MomentProblem, budget: &IntegrationBudget) -> Result<DualSolution> {
        let n = problem.len();
        if self.lambda.len() != n {
            return Err(Error::LengthMismatch { expected: n, found: self.lambda.len() });
        }
        if let Some(bad) = self.lambda.iter().find(|l| !(l.is_finite() && **l >= 0.0)) {
            return Err(Error::InvalidMultipliers(format!("multipliers must be finite and >= 0, got {bad}")));
        }
        let mut sol = match DualSolution::at(problem, &self.lambda, budget) {
            Ok(s) => s,
            Err(Error::DivergentPartition(_) | Error::DivergentIntegral { .. }) => DualSolution {
                lambda: self.lambda.clone(),
                alpha: f64::NAN,
                entropy: f64::NAN,
                entropy_dual: f64::NAN,
                fitted_moments: Vec::new(),
                active_set: active_set(&self.lambda),
                slackness_residual: f64::NAN,
                identity_residual: f64::NAN,
                truncation_box: (Vec::new(), Vec::new()),
                trace: Vec::new(),
                converged: false,
                iterations: 0,
                evaluations: 0,
            },
            Err(e) => return Err(e),
        };
        let dot = |v: &[f64]| self.lambda.iter().zip(v).map(|(l, m)| l * m).sum::<f64>();
        if let Some(alpha) = self.alpha {
            sol.alpha = alpha;
            sol.entropy = alpha + dot(&sol.fitted_moments);
            sol.entropy_dual = alpha + dot(&problem.bounds());
            sol.identity_residual = (sol.entropy - sol.entropy_dual).abs();
        }
        if let Some(h) = self.entropy {
            sol.entropy = h;
        }
        Ok(sol)
    }
}

/// Reads a solution file: either `{lambda, alpha?, entropy?}` or a report
/// whose `solution` holds those fields.
pub fn load_solution(path: &Path, problem: &MomentProblem, budget: &IntegrationBudget) -> Result<DualSolution> {
    let where_ = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config { path: where_.clone(), message: e.to_string() })?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Error::Config { path: where_.clone(), message: e.to_string() })?;
    let value = match value.get("solution") {
        Some(s) if s.is_object() => s.clone(),
        _ => value,
    };
    let file: SolutionFile = serde_path_to_error::deserialize(value).map_err(|e| Error::Config {
        path: format!("{where_}: {}", e.path()),
        message: e.inner().to_string(),
    })?;
    file.into_solution(problem, budget)
}

fn settings(config: &ProblemConfig) -> Settings {
    let q = config.quadrature_budget();
    Settings {
        solver_tol: config.solver.tol,
        solver_max_iter: config.solver.max_iter,
        solver_budget: config.solver_budget(),
        diagnosis_budget: q,
        certificate_budget: q.scaled(crate::certificate::RECOMPUTE_FACTOR).with_seed(q.seed.wrapping_add(1)),
    }
}

fn load_config(cli: &Cli, seed: Option<u64>) -> std::result::Result<(String, ProblemConfig), Failure> {
    let path = cli
        .config
        .as_ref()
        .ok_or((ExitCode::InvalidInput, "--config PATH is required for this command".to_string()))?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| (ExitCode::InvalidInput, format!("cannot read {}: {e}", path.display())))?;
    let mut config = parse_config(&text).map_err(fail)?;
    if let Some(s) = seed {
        config.override_seed(s);
    }
    Ok((text, config))
}

fn admissible(config: &ProblemConfig) -> Result<MomentProblem> {
    MomentProblem::new(config.support_set()?, config.constraint_pairs()?)
}

fn diagnose(config: &ProblemConfig) -> Result<(Option<MomentProblem>, ExistenceDiagnosis)> {
    diagnose_constraints(
        config.support_set()?,
        config.constraint_pairs()?,
        &config.quadrature_budget(),
        config.quadrature.seed,
    )
}

fn solve_options(config: &ProblemConfig) -> SolveOptions {
    SolveOptions {
        tol: config.solver.tol,
        max_iter: config.solver.max_iter,
        budget: config.solver_budget(),
        seed: config.solver.seed,
        initial: None,
    }
}

/// Diagnoses and solves, refusing problems without an existence route
/// unless forced.
fn solve_checked(
    cli: &Cli,
    config: &ProblemConfig,
    report: &mut RunReport,
) -> std::result::Result<(MomentProblem, DualSolution), Failure> {
    let (problem, diag) = diagnose(config).map_err(fail)?;
    report.diagnosis = Some(diag.clone());
    if diag.route == Route::None {
        report.messages.extend(diag.reasons.iter().map(|r| format!("no existence route: {r}")));
        if !cli.force || problem.is_none() {
            return Err((ExitCode::NoExistence, "no sufficient condition for existence holds".into()));
        }
        report.messages.push("solving without an existence route (--force)".into());
    }
    let problem = problem.expect("an admissible problem accompanies every route but none");
    match solve(&problem, &solve_options(config)) {
        Ok(sol) => {
            report.work.solver_iterations = sol.iterations;
            report.work.solver_evaluations = sol.evaluations;
            Ok((problem, sol))
        }
        Err(Error::NotConverged { iterations, projected_gradient, solution }) => {
            report.work.solver_iterations = solution.iterations;
            report.work.solver_evaluations = solution.evaluations;
            report.solution = Some(*solution);
            Err((
                ExitCode::NotConverged,
                format!("solver stopped after {iterations} iterations with projected gradient {projected_gradient:e}"),
            ))
        }
        Err(e) => Err(fail(e)),
    }
}

fn write_csv(cli: &Cli, config: &ProblemConfig, problem: &MomentProblem, sol: &DualSolution) -> std::result::Result<(), Failure> {
    let d = problem.dimension();
    let out = &config.output;
    let lower = out.lower.clone().unwrap_or_else(|| sol.truncation_box.0.clone());
    let upper = out.upper.clone().unwrap_or_else(|| sol.truncation_box.1.clone());
    for (name, v) in [("output.lower", &lower), ("output.upper", &upper)] {
        if v.len() != d || v.iter().any(|x| !x.is_finite()) {
            return Err((ExitCode::InvalidInput, format!("{name}: expected {d} finite entries")));
        }
    }
    if lower.iter().zip(&upper).any(|(a, b)| a >= b) {
        return Err((ExitCode::InvalidInput, "output: lower must lie below upper on every axis".into()));
    }
    let cells = out.grid.unwrap_or_else(|| default_grid(d));
    if cells == 0 {
        return Err((ExitCode::InvalidInput, "output.grid: must be at least 1".into()));
    }
    let csv = density_csv(&lower, &upper, cells, |x| problem.support().contains(x), |x| {
        density_at(sol, problem, &Point::new(x.to_vec())?)
    })
    .map_err(fail)?;
    std::fs::write(cli.out.join(&out.csv), csv).map_err(|e| fail(e.into()))
}

fn solve_command(cli: &Cli, config: &ProblemConfig, report: &mut RunReport) -> ExitCode {
    report.settings = Some(settings(config));
    let (problem, sol) = match solve_checked(cli, config, report) {
        Ok(v) => v,
        Err((code, msg)) => {
            report.messages.push(msg);
            return code;
        }
    };
    let s = settings(config);
    let tolerances = Tolerances::default_for(&problem, sol.entropy);
    let cert = match certify(&problem, &sol, &tolerances, &s.diagnosis_budget, s.certificate_budget.seed) {
        Ok(c) => c.with_slater(report.diagnosis.as_ref().expect("diagnosis precedes solve")),
        Err(e) => {
            report.solution = Some(sol);
            report.messages.push(e.to_string());
            return ExitCode::for_error(&e);
        }
    };
    report.work.certificate_evaluations = cert.evaluations;
    if let Err((code, msg)) = write_csv(cli, config, &problem, &sol) {
        report.messages.push(msg);
        return code;
    }
    let certified = cert.verdict.is_certified();
    if let crate::certificate::Verdict::Rejected(reason) = &cert.verdict {
        report.messages.push(format!("certificate rejected: {reason}"));
    }
    report.solution = Some(sol);
    report.certificate = Some(cert);
    if certified { ExitCode::Success } else { ExitCode::Rejected }
}

fn verify_command(config: &ProblemConfig, path: &Path, report: &mut RunReport) -> ExitCode {
    let s = settings(config);
    report.settings = Some(s);
    let result = admissible(config).and_then(|problem| {
        let sol = load_solution(path, &problem, &s.diagnosis_budget)?;
        let tol = Tolerances::default_for(&problem, sol.entropy);
        certify(&problem, &sol, &tol, &s.diagnosis_budget, s.certificate_budget.seed)
    });
    match result {
        Ok(cert) => {
            report.work.certificate_evaluations = cert.evaluations;
            let code = if cert.verdict.is_certified() { ExitCode::Success } else { ExitCode::Rejected };
            if let crate::certificate::Verdict::Rejected(reason) = &cert.verdict {
                report.messages.push(format!("certificate rejected: {reason}"));
            }
            report.certificate = Some(cert);
            code
        }
        Err(e) => {
            report.messages.push(e.to_string());
            ExitCode::for_error(&e)
        }
    }
}

fn diagnose_command(config: &ProblemConfig, report: &mut RunReport) -> ExitCode {
    report.settings = Some(settings(config));
    match diagnose(config) {
        Ok((_, diag)) => {
            let code = if diag.route == Route::None { ExitCode::NoExistence } else { ExitCode::Success };
            report.messages.extend(diag.reasons.iter().cloned());
            report.diagnosis = Some(diag);
            code
        }
        Err(e) => {
            report.messages.push(e.to_string());
            ExitCode::for_error(&e)
        }
    }
}

fn solution_for(
    cli: &Cli,
    config: &ProblemConfig,
    path: Option<&Path>,
) -> std::result::Result<(MomentProblem, DualSolution), Failure> {
    match path {
        Some(p) => {
            let problem = admissible(config).map_err(fail)?;
            let sol = load_solution(p, &problem, &config.quadrature_budget()).map_err(fail)?;
            Ok((problem, sol))
        }
        None => {
            let mut scratch = RunReport::new("", String::new());
            solve_checked(cli, config, &mut scratch).map_err(|(code, msg)| {
                let mut all = scratch.messages;
                all.push(msg);
                (code, all.join("\n"))
            })
        }
    }
}

fn eval_command(cli: &Cli, config: &ProblemConfig, path: Option<&Path>) -> std::result::Result<(), Failure> {
    let (problem, sol) = solution_for(cli, config, path)?;
    let d = problem.dimension();
    let stdin = std::io::stdin();
    let mut out = std::io::stdout().lock();
    for (k, line) in stdin.lock().lines().enumerate() {
        let line = line.map_err(|e| fail(e.into()))?;
        if line.trim().is_empty() {
            continue;
        }
        let coords: Vec<f64> = line
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| (ExitCode::InvalidInput, format!("stdin line {}: {e}", k + 1)))?;
        if coords.len() != d {
            return Err((ExitCode::InvalidInput, format!("stdin line {}: expected {d} coordinates, found {}", k + 1, coords.len())));
        }
        let f = density_at(&sol, &problem, &Point::new(coords.clone()).map_err(fail)?).map_err(fail)?;
        let mut row: Vec<String> = coords.iter().map(|v| full_precision(*v)).collect();
        row.push(full_precision(f));
        writeln!(out, "{}", row.join(" ")).map_err(|e| fail(e.into()))?;
    }
    Ok(())
}

fn sample_command(
    cli: &Cli,
    config: &ProblemConfig,
    n: usize,
    seed: u64,
    path: Option<&Path>,
) -> std::result::Result<(), Failure> {
    let (problem, sol) = solution_for(cli, config, path)?;
    let points = sample(&sol, &problem, n, seed).map_err(fail)?;
    let mut out = std::io::stdout().lock();
    for p in points {
        let row: Vec<String> = p.coords().iter().map(|v| full_precision(*v)).collect();
        writeln!(out, "{}", row.join(" ")).map_err(|e| fail(e.into()))?;
    }
    Ok(())
}

fn print_summary(report: &RunReport) {
    println!("status: {} (exit {})", report.status, report.exit_code);
    if let Some(d) = &report.diagnosis {
        let route = match d.route {
            Route::FiniteVolume => "finite-volume",
            Route::Stabilizing => "stabilizing",
            Route::None => "none",
        };
        println!("existence route: {route}");
        if let Some(b) = &d.entropy_bracket {
            let lo = b.lower.map_or("-inf".to_string(), |v| format!("{v:.6}"));
            println!("entropy bracket: [{lo}, {:.6}]", b.upper);
        }
    }
    if let Some(s) = &report.solution {
        println!("lambda: {:?}", s.lambda);
        println!("alpha: {:.10}", s.alpha);
        println!("entropy: {:.10}", s.entropy);
        println!("iterations: {}", s.iterations);
    }
    if let Some(c) = &report.certificate {
        let opt = |v: Option<f64>| v.map_or("n/a".to_string(), |v| format!("{v:.3e}"));
        println!("residual            value       tolerance");
        println!("feasibility         {:<11} {:.3e}", format!("{:.3e}", c.max_feasibility_residual()), c.tolerances.feasibility);
        println!("slackness           {:<11} {:.3e}", opt(c.slackness_residual), c.tolerances.slackness);
        println!("entropy identity    {:<11} {:.3e}", opt(c.entropy_identity_residual), c.tolerances.entropy);
        println!("certificate: {}", if c.verdict.is_certified() { "certified" } else { "rejected" });
    }
}

/// Records the outcome, writes the report and prints the summary.
fn finish(cli: &Cli, config: &ProblemConfig, report: &mut RunReport, code: ExitCode, started: Instant) -> ExitCode {
    report.exit_code = code.code();
    report.status = code.status().into();
    for m in &report.messages {
        eprintln!("{m}");
    }
    let path = cli.out.join(&config.output.report);
    if let Err(e) = std::fs::create_dir_all(&cli.out).and_then(|_| std::fs::write(&path, report.to_json())) {
        eprintln!("error: cannot write {}: {e}", path.display());
        return ExitCode::Failure;
    }
    if !cli.quiet {
        print_summary(report);
        eprintln!("wall-clock: {:.3} s", started.elapsed().as_secs_f64());
    }
    code
}

pub(super) fn dispatch(cli: &Cli, seed: Option<u64>) -> ExitCode {
    if let Command::Selftest { solver_tol, budget } = &cli.command {
        return selftest(cli, *solver_tol, *budget);
    }
    let started = Instant::now();
    let (text, config) = match load_config(cli, seed) {
        Ok(v) => v,
        Err((code, msg)) => {
            eprintln!("error: {msg}");
            return code;
        }
    };
    let report = |name: &str| RunReport::new(name, text.clone());
    let simple = |r: std::result::Result<(), Failure>| match r {
        Ok(()) => ExitCode::Success,
        Err((code, msg)) => {
            eprintln!("error: {msg}");
            code
        }
    };
    if matches!(cli.command, Command::Solve | Command::Verify { .. } | Command::Diagnose) {
        if let Err(e) = std::fs::create_dir_all(&cli.out) {
            eprintln!("error: cannot create {}: {e}", cli.out.display());
            return ExitCode::Failure;
        }
    }
    match &cli.command {
        Command::Solve => {
            let mut r = report("solve");
            let code = solve_command(cli, &config, &mut r);
            finish(cli, &config, &mut r, code, started)
        }
        Command::Verify { solution } => {
            let mut r = report("verify");
            let code = verify_command(&config, solution, &mut r);
            finish(cli, &config, &mut r, code, started)
        }
        Command::Diagnose => {
            let mut r = report("diagnose");
            let code = diagnose_command(&config, &mut r);
            finish(cli, &config, &mut r, code, started)
        }
        Command::Eval { solution } => simple(eval_command(cli, &config, solution.as_deref())),
        Command::Sample { n, seed: s, solution } => {
            let s = s.unwrap_or(config.solver.seed);
            simple(sample_command(cli, &config, *n, s, solution.as_deref()))
        }
        Command::Selftest { .. } => unreachable!("handled above"),
    }
}

/// Outcome of one fixture check.
struct Check {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: String) -> Check {
    Check { pass, detail }
}

fn selftest(cli: &Cli, solver_tol: f64, budget: Option<usize>) -> ExitCode {
    let default = IntegrationBudget::default();
    let b = IntegrationBudget { max_evaluations: budget.unwrap_or(default.max_evaluations), ..default };
    let widen = if b.max_evaluations < default.max_evaluations { SELFTEST_WIDENING } else { 1.0 };
    if !(solver_tol > 0.0) {
        eprintln!("error: --solver-tol must be positive");
        return ExitCode::InvalidInput;
    }
    if widen > 1.0 {
        eprintln!("warning: budget {} is below the default; tolerances widened {SELFTEST_WIDENING}x", b.max_evaluations);
    }
    let options = SolveOptions { tol: solver_tol, budget: b, ..SolveOptions::default() };
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for f in analytic_fixtures() {
        let p = &f.problem;
        let sol = solve(p, &options).or_else(|e| match e {
            Error::NotConverged { solution, .. } => Ok(*solution),
            e => Err(e),
        });
        let checks: [Check; 3] = match sol {
            Err(e) => {
                let c = || check(false, format!("solve failed: {e}"));
                [c(), c(), c()]
            }
            Ok(sol) => {
                if let Ok(fam) = family_integrals(p, &sol.lambda, &b) {
                    if !fam.converged {
                        eprintln!("warning: {}: integration budget exhausted before the accuracy target", f.name);
                    }
                }
                let lambda_err = sol.lambda.iter().zip(&f.lambda_true).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                let h_err = (sol.entropy - f.entropy_true).abs();
                let solved = check(
                    sol.converged && lambda_err <= SELFTEST_LAMBDA_TOL * widen && h_err <= SELFTEST_ENTROPY_TOL * widen,
                    format!("converged {}, lambda error {lambda_err:.3e}, entropy error {h_err:.3e}", sol.converged),
                );
                let base = Tolerances::default_for(p, sol.entropy);
                let tol = Tolerances {
                    feasibility: base.feasibility * widen,
                    slackness: base.slackness * widen,
                    entropy: base.entropy * widen,
                };
                let certified = match certify(p, &sol, &tol, &b, 1) {
                    Ok(c) => match c.verdict {
                        crate::certificate::Verdict::Certified => check(true, String::new()),
                        crate::certificate::Verdict::Rejected(r) => check(false, r),
                    },
                    Err(e) => check(false, e.to_string()),
                };
                let (lo, hi) = &f.truncation;
                let grid = match grid_solve(p, (lo, hi), SELFTEST_GRID_CELLS, 1e-10) {
                    Ok(g) => {
                        let tv = g.tv_distance(|x| {
                            Point::new(x.to_vec()).and_then(|pt| density_at(&sol, p, &pt)).unwrap_or(f64::NAN)
                        });
                        let gap = (g.entropy_grid - sol.entropy).abs();
                        check(
                            tv <= SELFTEST_TV_TOL && gap <= SELFTEST_GRID_ENTROPY_TOL,
                            format!("total variation {tv:.3e}, entropy gap {gap:.3e}"),
                        )
                    }
                    Err(e) => check(false, e.to_string()),
                };
                [solved, certified, grid]
            }
        };
        for (name, c) in ["solve", "certify", "grid"].iter().zip(&checks) {
            if !c.pass {
                failures.push(format!("{} / {name}: {}", f.name, c.detail));
            }
        }
        rows.push((f.name, checks.map(|c| c.pass)));
    }
    if !cli.quiet {
        println!("{:<24}{:<9}{:<9}{:<9}", "fixture", "solve", "certify", "grid");
        for (name, passes) in &rows {
            let cell = |p: bool| if p { "PASS" } else { "FAIL" };
            println!("{name:<24}{:<9}{:<9}{:<9}", cell(passes[0]), cell(passes[1]), cell(passes[2]));
        }
    }
    if failures.is_empty() {
        ExitCode::Success
    } else {
        for f in &failures {
            eprintln!("FAILED {f}");
        }
        ExitCode::Failure
    }
}
