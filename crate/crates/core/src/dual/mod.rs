//! The convex dual of the maximum-entropy problem,
//!
//! ```text
//! D(lambda) = alpha(lambda) + sum_g lambda_g u_g,   lambda >= 0,
//! alpha(lambda) = ln int_S exp(-sum_g lambda_g phi_g),
//! ```
//!
//! its minimisation, and the exponential-form density assembled from the
//! minimiser.

mod sampler;
mod solver;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measurements::MomentProblem;
use crate::quadrature::{family_integrals, FamilyIntegrals, IntegrationBudget};

pub use sampler::{density_at, sample, ACCEPTANCE_FLOOR, COLLAPSE_TRIALS};
pub use solver::{solve, SolveOptions};

/// Relative multiplier size above which a constraint counts as active.
pub const ACTIVATION_THRESHOLD: f64 = 1e-8;

/// One solver iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub objective: f64,
    /// Infinity norm of the projected gradient.
    pub gradient_norm: f64,
    /// Infinity norm of the accepted multiplier change.
    pub step: f64,
}

/// Multipliers and the exponential-form density they define,
/// `pi(x) = 1_S(x) exp(-alpha - sum_g lambda_g phi_g(x))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualSolution {
    pub lambda: Vec<f64>,
    pub alpha: f64,
    /// `alpha + sum lambda_g E[phi_g]`.
    pub entropy: f64,
    /// `alpha + sum lambda_g u_g`.
    pub entropy_dual: f64,
    pub fitted_moments: Vec<f64>,
    pub active_set: Vec<bool>,
    /// `sum lambda_g (E[phi_g] - u_g)`.
    pub slackness_residual: f64,
    /// `|entropy - entropy_dual|`.
    pub identity_residual: f64,
    /// Box outside which the density carries negligible mass.
    pub truncation_box: (Vec<f64>, Vec<f64>),
    pub trace: Vec<TraceRecord>,
    pub converged: bool,
    pub iterations: usize,
    /// Integrand evaluations spent.
    pub evaluations: usize,
}

impl DualSolution {
    /// Assembles the solution record for given multipliers, without solving.
    pub fn at(problem: &MomentProblem, lambda: &[f64], budget: &IntegrationBudget) -> Result<Self> {
        let fam = family_integrals(problem, lambda, budget)?;
        Ok(Self::assemble(problem, lambda, &fam, Vec::new(), fam.converged, 0, fam.evaluations))
    }

    pub(crate) fn assemble(
        problem: &MomentProblem,
        lambda: &[f64],
        fam: &FamilyIntegrals,
        trace: Vec<TraceRecord>,
        converged: bool,
        iterations: usize,
        evaluations: usize,
    ) -> Self {
        let u = problem.bounds();
        let dot = |v: &[f64]| lambda.iter().zip(v).map(|(l, m)| l * m).sum::<f64>();
        let entropy = fam.alpha + dot(&fam.moments);
        let entropy_dual = fam.alpha + dot(&u);
        let slackness_residual = lambda.iter().zip(fam.moments.iter().zip(&u)).map(|(l, (m, b))| l * (m - b)).sum();
        Self {
            lambda: lambda.to_vec(),
            alpha: fam.alpha,
            entropy,
            entropy_dual,
            fitted_moments: fam.moments.clone(),
            active_set: active_set(lambda),
            slackness_residual,
            identity_residual: (entropy - entropy_dual).abs(),
            truncation_box: fam.truncation_box.clone(),
            trace,
            converged,
            iterations,
            evaluations,
        }
    }

    pub fn active_count(&self) -> usize {
        self.active_set.iter().filter(|a| **a).count()
    }
}

/// `lambda_g > 1e-8 (1 + |lambda|_inf)`.
pub fn active_set(lambda: &[f64]) -> Vec<bool> {
    let scale = lambda.iter().fold(0.0f64, |m, l| m.max(l.abs()));
    lambda.iter().map(|l| *l > ACTIVATION_THRESHOLD * (1.0 + scale)).collect()
}

fn check_lambda(problem: &MomentProblem, lambda: &[f64]) -> Result<()> {
    if lambda.len() != problem.len() {
        return Err(Error::LengthMismatch { expected: problem.len(), found: lambda.len() });
    }
    Ok(())
}

/// `D(lambda) = alpha(lambda) + lambda . u`.
pub fn dual_objective(problem: &MomentProblem, lambda: &[f64], budget: &IntegrationBudget) -> Result<f64> {
    check_lambda(problem, lambda)?;
    let fam = family_integrals(problem, lambda, budget)?;
    Ok(fam.alpha + lambda.iter().zip(problem.bounds()).map(|(l, u)| l * u).sum::<f64>())
}

/// `grad D(lambda)_g = u_g - E_lambda[phi_g]`.
pub fn dual_gradient(problem: &MomentProblem, lambda: &[f64], budget: &IntegrationBudget) -> Result<Vec<f64>> {
    check_lambda(problem, lambda)?;
    let fam = family_integrals(problem, lambda, budget)?;
    Ok(problem.bounds().iter().zip(&fam.moments).map(|(u, m)| u - m).collect())
}
