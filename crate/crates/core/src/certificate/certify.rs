use serde::{Deserialize, Serialize};

use crate::dual::DualSolution;
use crate::error::{Error, Result};
use crate::measurements::MomentProblem;
use crate::quadrature::{family_integrals, IntegrationBudget};

use super::{ExistenceDiagnosis, Route};

/// Budget multiplier for the independent recomputation.
pub const RECOMPUTE_FACTOR: usize = 4;

/// Residual bounds a certificate is judged against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub feasibility: f64,
    pub slackness: f64,
    pub entropy: f64,
}

impl Tolerances {
    /// `1e-5 (1 + |u|_inf)` for feasibility and slackness, `1e-4 (1 + |h|)`
    /// for the entropy identity.
    pub fn default_for(problem: &MomentProblem, entropy: f64) -> Self {
        let u = problem.bounds().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let h = if entropy.is_finite() { entropy.abs() } else { 0.0 };
        Self { feasibility: 1e-5 * (1.0 + u), slackness: 1e-5 * (1.0 + u), entropy: 1e-4 * (1.0 + h) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", content = "reason", rename_all = "kebab-case")]
pub enum Verdict {
    Certified,
    Rejected(String),
}

impl Verdict {
    pub fn is_certified(&self) -> bool {
        matches!(self, Verdict::Certified)
    }
}

/// Whether a strictly feasible density is known to exist.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SlaterStatus {
    Verified,
    NotVerified,
    Unknown,
}

/// Optimality certificate for an exponential-form candidate: it is the
/// maximum-entropy density when it is feasible, complementary slackness
/// holds, and its support is `S`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub lambda: Vec<f64>,
    /// Recomputed log-partition; absent when the recomputation diverged.
    pub alpha: Option<f64>,
    /// Recomputed `E[phi_g]`; empty when the recomputation diverged.
    pub moments: Vec<f64>,
    /// `max(0, E[phi_g] - u_g)`.
    pub feasibility_residuals: Vec<f64>,
    /// `|sum lambda_g (E[phi_g] - u_g)|`.
    pub slackness_residual: Option<f64>,
    /// `|h_claimed - (alpha + sum lambda_g E[phi_g])|`.
    pub entropy_identity_residual: Option<f64>,
    /// The candidate is taken to be positive on all of `S`.
    pub support_assumption: String,
    pub slater: SlaterStatus,
    pub tolerances: Tolerances,
    pub verdict: Verdict,
    pub evaluations: usize,
    pub seed: u64,
}

impl Certificate {
    /// Records whether the diagnosis found a strictly feasible witness.
    pub fn with_slater(mut self, diagnosis: &ExistenceDiagnosis) -> Self {
        self.slater = match (&diagnosis.slater_witness, diagnosis.route) {
            (Some(_), _) => SlaterStatus::Verified,
            (None, Route::None) => SlaterStatus::Unknown,
            (None, _) => SlaterStatus::NotVerified,
        };
        self
    }

    pub fn max_feasibility_residual(&self) -> f64 {
        self.feasibility_residuals.iter().fold(0.0, |m: f64, v| m.max(*v))
    }
}

const SUPPORT_ASSUMPTION: &str = "candidate support taken equal to S by construction";

/// Checks a candidate solution against the optimality conditions, with
/// moments recomputed at four times `budget` using `seed`.
pub fn certify(
    problem: &MomentProblem,
    solution: &DualSolution,
    tolerances: &Tolerances,
    budget: &IntegrationBudget,
    seed: u64,
) -> Result<Certificate> {
    let n = problem.len();
    if solution.lambda.len() != n {
        return Err(Error::LengthMismatch { expected: n, found: solution.lambda.len() });
    }
    if let Some(bad) = solution.lambda.iter().find(|l| !(l.is_finite() && **l >= 0.0)) {
        return Err(Error::InvalidMultipliers(format!("multipliers must be finite and >= 0, got {bad}")));
    }
    let budget = budget.scaled(RECOMPUTE_FACTOR).with_seed(seed);
    let mut cert = Certificate {
        lambda: solution.lambda.clone(),
        alpha: None,
        moments: Vec::new(),
        feasibility_residuals: Vec::new(),
        slackness_residual: None,
        entropy_identity_residual: None,
        support_assumption: SUPPORT_ASSUMPTION.to_string(),
        slater: SlaterStatus::Unknown,
        tolerances: *tolerances,
        verdict: Verdict::Certified,
        evaluations: 0,
        seed,
    };
    let fam = match family_integrals(problem, &solution.lambda, &budget) {
        Ok(f) => f,
        Err(e @ (Error::DivergentPartition(_) | Error::DivergentIntegral { .. })) => {
            cert.verdict = Verdict::Rejected(format!("divergent: {e}"));
            return Ok(cert);
        }
        Err(e) => return Err(e),
    };
    let u = problem.bounds();
    let slackness = solution
        .lambda
        .iter()
        .zip(fam.moments.iter().zip(&u))
        .map(|(l, (m, b))| l * (m - b))
        .sum::<f64>()
        .abs();
    let recomputed = fam.alpha + solution.lambda.iter().zip(&fam.moments).map(|(l, m)| l * m).sum::<f64>();
    let identity = (solution.entropy - recomputed).abs();
    cert.alpha = Some(fam.alpha);
    cert.evaluations = fam.evaluations;
    cert.feasibility_residuals = fam.moments.iter().zip(&u).map(|(m, b)| (m - b).max(0.0)).collect();
    cert.slackness_residual = Some(slackness);
    cert.entropy_identity_residual = Some(identity);
    cert.moments = fam.moments;

    let mut failures = Vec::new();
    for (g, r) in cert.feasibility_residuals.iter().enumerate() {
        if !(*r < tolerances.feasibility) {
            failures.push(format!("constraint {g} violated by {r:e} (tolerance {:e})", tolerances.feasibility));
        }
    }
    if !(slackness < tolerances.slackness) {
        failures.push(format!("complementary slackness residual {slackness:e} exceeds {:e}", tolerances.slackness));
    }
    if !(identity < tolerances.entropy) {
        failures.push(format!("entropy identity residual {identity:e} exceeds {:e}", tolerances.entropy));
    }
    if !failures.is_empty() {
        cert.verdict = Verdict::Rejected(failures.join("; "));
    }
    Ok(cert)
}
