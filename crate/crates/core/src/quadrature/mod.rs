//! Integrals of the exponential family `exp(-sum lambda_g phi_g)` over the
//! support: partition function, log-partition and moments.
//!
//! For `d <= 3` the integrand is integrated by adaptive tensor Gauss-Kronrod
//! cubature on a box centred at the mode of the exponent. Unbounded supports
//! are truncated; the truncation radius starts at `8 / sqrt(c)` (where `c` is
//! the declared quadratic confinement of the exponent, `16` without one) and
//! doubles until the mass gained by the last doubling is below `1e-9` of the
//! running value. Tail masses that stop shrinking for four consecutive
//! doublings flag the integral as divergent.
//!
//! For `d > 3` the integrals are estimated by importance sampling from a
//! seeded diagonal-Gaussian proposal matched to the mode.
//!
//! Everything is carried in log scale so that multipliers spanning many
//! orders of magnitude neither overflow nor underflow.

mod cubature;
pub(crate) mod laplace;
pub(crate) mod monte_carlo;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measurements::{MeasurementFunction, MomentProblem, SupportSet};

use cubature::Attempt;

/// Relative tail mass below which truncation doubling stops.
pub const TAIL_TOLERANCE: f64 = 1e-9;
/// Consecutive non-shrinking tails that mark an integral divergent.
pub const DIVERGENCE_DOUBLINGS: usize = 4;
const MAX_DOUBLINGS: usize = 48;
const DEFAULT_RADIUS: f64 = 16.0;
/// Cap on the starting radius in units of the local energy scale.
const SCALE_RADII: f64 = 32.0;
/// Smallest evaluation budget accepted by [`integrate`].
pub const MIN_BUDGET: usize = 1_000;

/// Evaluation budget, accuracy target and seed for one integration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegrationBudget {
    pub max_evaluations: usize,
    pub rel_tol: f64,
    pub seed: u64,
}

impl Default for IntegrationBudget {
    fn default() -> Self {
        Self { max_evaluations: 2_000_000, rel_tol: 1e-10, seed: 0 }
    }
}

impl IntegrationBudget {
    pub fn scaled(&self, factor: usize) -> Self {
        Self { max_evaluations: self.max_evaluations.saturating_mul(factor), ..*self }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..*self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Adaptive1d,
    TensorProduct,
    MonteCarlo,
}

/// `int_S weight(x) exp(-sum lambda_g phi_g(x)) dx`.
#[derive(Debug, Clone)]
pub struct IntegrationRequest {
    pub support: SupportSet,
    pub exponent_terms: Vec<(f64, MeasurementFunction)>,
    pub weight: Option<MeasurementFunction>,
    pub budget: IntegrationBudget,
    /// Forces a single truncation radius instead of the doubling schedule.
    pub truncation_radius: Option<f64>,
    /// Selects the random stream for Monte Carlo.
    pub ordinal: u64,
}

impl IntegrationRequest {
    pub fn new(support: SupportSet, exponent_terms: Vec<(f64, MeasurementFunction)>) -> Self {
        Self {
            support,
            exponent_terms,
            weight: None,
            budget: IntegrationBudget::default(),
            truncation_radius: None,
            ordinal: 0,
        }
    }

    pub fn weight(mut self, weight: MeasurementFunction) -> Self {
        self.weight = Some(weight);
        self
    }

    pub fn budget(mut self, budget: IntegrationBudget) -> Self {
        self.budget = budget;
        self
    }

    pub fn truncation_radius(mut self, radius: f64) -> Self {
        self.truncation_radius = Some(radius);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureResult {
    pub value: f64,
    /// Natural log of `|value|`.
    pub log_value: f64,
    pub abs_error_estimate: f64,
    pub evaluations_used: usize,
    pub method: Method,
    pub truncation_radius: f64,
    /// False when the budget ran out before the tolerance was met.
    pub converged: bool,
}

/// Integrand `[1, phi_k...] * exp(-E)`, `E = sum c_i f_i`, zero off `S`.
pub(crate) struct Integrand<'a> {
    support: &'a SupportSet,
    functions: Vec<&'a MeasurementFunction>,
    coeffs: Vec<f64>,
    moments: Vec<usize>,
}

impl<'a> Integrand<'a> {
    pub(crate) fn new(support: &'a SupportSet, terms: Vec<(&'a MeasurementFunction, f64)>, moments: Vec<usize>) -> Self {
        let (functions, coeffs) = terms.into_iter().unzip();
        Self { support, functions, coeffs, moments }
    }

    pub(crate) fn components(&self) -> usize {
        1 + self.moments.len()
    }

    fn exponent_is_trivial(&self) -> bool {
        self.coeffs.iter().all(|c| *c == 0.0)
    }

    /// Energy at `x`, or `None` outside the support.
    pub(crate) fn energy(&self, x: &[f64], scratch: &mut [f64]) -> Option<f64> {
        if !self.support.contains(x) {
            return None;
        }
        let mut e = 0.0;
        for (i, (f, c)) in self.functions.iter().zip(&self.coeffs).enumerate() {
            let needed = *c != 0.0 || self.moments.contains(&i);
            scratch[i] = if needed { f.value(x) } else { 0.0 };
            if *c != 0.0 {
                e += c * scratch[i];
            }
        }
        Some(e)
    }

    /// Energy plus component values `[1, phi_k...]` written to `out`.
    pub(crate) fn eval(&self, x: &[f64], scratch: &mut [f64], out: &mut [f64]) -> Option<f64> {
        let e = self.energy(x, scratch)?;
        out[0] = 1.0;
        for (k, &i) in self.moments.iter().enumerate() {
            out[k + 1] = scratch[i];
        }
        Some(e)
    }

    /// Sum of `lambda * c` over terms with a declared quadratic growth `c`.
    fn confinement(&self) -> f64 {
        self.functions
            .iter()
            .zip(&self.coeffs)
            .filter_map(|(f, c)| f.attributes().quadratic_growth.map(|g| g * c))
            .sum()
    }
}

/// Integrals of all components; true value of component `k` is
/// `values[k] * exp(log_scale)`.
#[derive(Debug, Clone)]
pub(crate) struct VectorIntegral {
    pub log_scale: f64,
    pub values: Vec<f64>,
    pub errors: Vec<f64>,
    pub evaluations: usize,
    pub method: Method,
    pub truncation_radius: f64,
    pub truncation_box: (Vec<f64>, Vec<f64>),
    pub converged: bool,
    pub mode: Vec<f64>,
    pub min_energy: f64,
}

impl VectorIntegral {
    pub(crate) fn log_z(&self) -> f64 {
        self.values[0].ln() + self.log_scale
    }

    pub(crate) fn z_rel_err(&self) -> f64 {
        self.errors[0] / self.values[0]
    }

    pub(crate) fn moment(&self, k: usize) -> f64 {
        self.values[k + 1] / self.values[0]
    }

    pub(crate) fn moment_err(&self, k: usize) -> f64 {
        (self.errors[k + 1] + self.moment(k).abs() * self.errors[0]) / self.values[0]
    }
}

fn box_at(support: &SupportSet, centre: &[f64], radius: f64) -> (Vec<f64>, Vec<f64>, bool) {
    let (blo, bhi) = support.bounding_box();
    let d = centre.len();
    let (mut lo, mut hi) = (vec![0.0; d], vec![0.0; d]);
    let mut covered = true;
    for i in 0..d {
        lo[i] = (centre[i] - radius).max(blo[i]);
        hi[i] = (centre[i] + radius).min(bhi[i]);
        if lo[i] > blo[i] || hi[i] < bhi[i] {
            covered = false;
        }
    }
    (lo, hi, covered)
}

struct BoxIntegral {
    log_scale: f64,
    values: Vec<f64>,
    errors: Vec<f64>,
    abs: Vec<f64>,
    evaluations: usize,
    converged: bool,
}

impl BoxIntegral {
    fn rescaled(&self, log_scale: f64) -> Vec<f64> {
        let f = (self.log_scale - log_scale).exp();
        self.values.iter().map(|v| v * f).collect()
    }
}

fn integrate_box(integrand: &Integrand<'_>, lo: &[f64], hi: &[f64], mut shift: f64, rel_tol: f64, budget: usize) -> BoxIntegral {
    for _ in 0..16 {
        match cubature::adaptive(integrand, lo, hi, shift, rel_tol, budget) {
            Attempt::Done(o) => {
                return BoxIntegral {
                    log_scale: -shift,
                    values: o.values,
                    errors: o.errors,
                    abs: o.abs,
                    evaluations: o.evaluations,
                    converged: o.converged,
                }
            }
            Attempt::Reshift(e) => shift = e,
        }
    }
    unreachable!("energy shift failed to stabilise")
}

fn deterministic(integrand: &Integrand<'_>, budget: &IntegrationBudget, fixed_radius: Option<f64>) -> Result<VectorIntegral> {
    let support = integrand.support;
    let d = support.dimension();
    let (centre, min_energy) = laplace::locate_minimizer(integrand, support);
    let conf = integrand.confinement();
    let mut radius = if conf > 0.0 { (8.0 / conf.sqrt()).clamp(1e-12, 1e8) } else { DEFAULT_RADIUS };
    // Sharply peaked integrands would slip between the nodes of a wide box.
    if min_energy.is_finite() {
        radius = radius.min(SCALE_RADII * laplace::energy_scale(integrand, &centre, min_energy));
    }
    let mut radius = fixed_radius.unwrap_or(radius);
    let method = if d == 1 { Method::Adaptive1d } else { Method::TensorProduct };
    let bounded = {
        let (blo, bhi) = support.bounding_box();
        blo.iter().chain(bhi).all(|v| v.is_finite())
    };

    let mut evaluations = 0usize;
    let mut converged = true;
    let mut shift = if min_energy.is_finite() { min_energy } else { 0.0 };
    let mut previous: Option<BoxIntegral> = None;
    let mut last_log_tail = f64::NEG_INFINITY;
    let mut last_tail_rel: f64 = 1.0;
    let mut growing = 0usize;

    for doubling in 0..=MAX_DOUBLINGS {
        let (lo, hi, covered) = box_at(support, &centre, radius);
        let remaining = budget.max_evaluations.saturating_sub(evaluations).max(15usize.pow(d as u32) * 3);
        let current = integrate_box(integrand, &lo, &hi, shift, budget.rel_tol, remaining);
        evaluations += current.evaluations;
        converged &= current.converged;
        shift = -current.log_scale;

        let finish = |cur: BoxIntegral, tail_rel: f64, converged: bool, evaluations: usize| {
            let mut errors = cur.errors.clone();
            for (e, v) in errors.iter_mut().zip(&cur.abs) {
                *e += tail_rel * v;
            }
            VectorIntegral {
                log_scale: cur.log_scale,
                values: cur.values,
                errors,
                evaluations,
                method,
                truncation_radius: radius,
                truncation_box: (lo.clone(), hi.clone()),
                converged,
                mode: centre.clone(),
                min_energy,
            }
        };

        if current.values[0] <= 0.0 || !current.values[0].is_finite() {
            if covered {
                return Err(Error::DivergentIntegral { radius });
            }
            previous = Some(current);
            radius *= 2.0;
            continue;
        }
        if fixed_radius.is_some() || covered {
            return Ok(finish(current, 0.0, converged, evaluations));
        }
        if let Some(prev) = previous.take() {
            let prev_vals = prev.rescaled(current.log_scale);
            // Relative mass gained in each component by the last doubling.
            let tail_rel = (0..current.values.len())
                .map(|c| {
                    let scale = current.abs[c].max(1e-300);
                    (current.values[c] - prev_vals[c]).abs() / scale
                })
                .fold(0.0, f64::max);
            if tail_rel <= TAIL_TOLERANCE {
                // Geometric extrapolation of what lies beyond the final box.
                let beyond = (tail_rel * tail_rel / last_tail_rel.max(tail_rel)).min(tail_rel);
                return Ok(finish(current, beyond, converged, evaluations));
            }
            let log_tail = (current.values[0] - prev_vals[0]).abs().ln() + current.log_scale;
            if !bounded {
                if log_tail >= last_log_tail {
                    growing += 1;
                } else {
                    growing = 0;
                }
                if growing >= DIVERGENCE_DOUBLINGS {
                    return Err(Error::DivergentIntegral { radius });
                }
            }
            last_log_tail = log_tail;
            last_tail_rel = tail_rel;
        }
        if evaluations >= budget.max_evaluations {
            return Ok(finish(current, last_tail_rel, false, evaluations));
        }
        previous = Some(current);
        radius *= 2.0;
        let _ = doubling;
    }
    Err(Error::DivergentIntegral { radius })
}

pub(crate) fn integrate_vector(integrand: &Integrand<'_>, budget: &IntegrationBudget, fixed_radius: Option<f64>, ordinal: u64) -> Result<VectorIntegral> {
    let support = integrand.support;
    if integrand.exponent_is_trivial() && !support.finite_volume() {
        return Err(Error::DivergentIntegral { radius: f64::INFINITY });
    }
    if support.dimension() <= 3 {
        deterministic(integrand, budget, fixed_radius)
    } else {
        monte_carlo::importance(integrand, support, budget, ordinal)
    }
}

fn check_multipliers(lambda: &[f64], expected: usize) -> Result<()> {
    if lambda.len() != expected {
        return Err(Error::LengthMismatch { expected, found: lambda.len() });
    }
    if let Some(bad) = lambda.iter().find(|l| !(l.is_finite() && **l >= 0.0)) {
        return Err(Error::InvalidMultipliers(format!("multipliers must be finite and >= 0, got {bad}")));
    }
    Ok(())
}

/// Integrates `weight * exp(-sum lambda phi)` over the support.
pub fn integrate(req: &IntegrationRequest) -> Result<QuadratureResult> {
    if req.budget.max_evaluations < MIN_BUDGET {
        return Err(Error::InvalidProblem(format!("integration budget must be at least {MIN_BUDGET}")));
    }
    if !(req.budget.rel_tol > 0.0) {
        return Err(Error::InvalidProblem("target relative tolerance must be positive".into()));
    }
    let d = req.support.dimension();
    let lambdas: Vec<f64> = req.exponent_terms.iter().map(|(l, _)| *l).collect();
    check_multipliers(&lambdas, lambdas.len())?;
    let mut terms: Vec<(&MeasurementFunction, f64)> = Vec::new();
    for (l, f) in &req.exponent_terms {
        if f.dimension() != d {
            return Err(Error::DimensionMismatch { expected: d, found: f.dimension() });
        }
        terms.push((f, *l));
    }
    let mut moments = Vec::new();
    if let Some(w) = &req.weight {
        if w.dimension() != d {
            return Err(Error::DimensionMismatch { expected: d, found: w.dimension() });
        }
        moments.push(terms.len());
        terms.push((w, 0.0));
    }
    let integrand = Integrand::new(&req.support, terms, moments);
    let v = integrate_vector(&integrand, &req.budget, req.truncation_radius, req.ordinal)?;
    let k = if req.weight.is_some() { 1 } else { 0 };
    let scale = v.log_scale.exp();
    let log_value = v.values[k].abs().ln() + v.log_scale;
    Ok(QuadratureResult {
        value: v.values[k] * scale,
        log_value,
        abs_error_estimate: v.errors[k] * scale,
        evaluations_used: v.evaluations,
        method: v.method,
        truncation_radius: v.truncation_radius,
        converged: v.converged,
    })
}

/// Log-partition, moments and their error estimates at one multiplier vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyIntegrals {
    pub alpha: f64,
    pub alpha_err: f64,
    pub moments: Vec<f64>,
    pub moment_errs: Vec<f64>,
    pub evaluations: usize,
    pub converged: bool,
    pub method: Method,
    pub truncation_box: (Vec<f64>, Vec<f64>),
    /// Located minimiser of the exponent.
    pub mode: Vec<f64>,
    pub min_energy: f64,
}

/// Log-partition and all constraint moments from one shared set of nodes.
pub fn family_integrals(problem: &MomentProblem, lambda: &[f64], budget: &IntegrationBudget) -> Result<FamilyIntegrals> {
    family_integrals_at(problem, lambda, budget, None)
}

pub(crate) fn family_integrals_at(
    problem: &MomentProblem,
    lambda: &[f64],
    budget: &IntegrationBudget,
    fixed_radius: Option<f64>,
) -> Result<FamilyIntegrals> {
    check_multipliers(lambda, problem.len())?;
    let support = problem.support();
    if lambda.iter().all(|l| *l == 0.0) && !support.finite_volume() {
        return Err(Error::DivergentPartition(
            "all multipliers are zero on a support of infinite volume".into(),
        ));
    }
    let terms = problem.constraints().iter().zip(lambda).map(|(c, l)| (&c.function, *l)).collect();
    let integrand = Integrand::new(support, terms, (0..problem.len()).collect());
    let v = integrate_vector(&integrand, budget, fixed_radius, 0).map_err(|e| match e {
        Error::DivergentIntegral { radius } => Error::DivergentPartition(format!(
            "exp(-sum lambda phi) is not integrable at lambda = {lambda:?} (tail mass still growing at radius {radius}); \
             a constraint whose function is stable on the support is needed"
        )),
        other => other,
    })?;
    Ok(FamilyIntegrals {
        alpha: v.log_z(),
        alpha_err: v.z_rel_err(),
        moments: (0..problem.len()).map(|k| v.moment(k)).collect(),
        moment_errs: (0..problem.len()).map(|k| v.moment_err(k)).collect(),
        evaluations: v.evaluations,
        converged: v.converged,
        method: v.method,
        truncation_box: v.truncation_box,
        mode: v.mode,
        min_energy: v.min_energy,
    })
}

/// `alpha = ln int_S exp(-sum lambda phi)` and its absolute error estimate.
pub fn log_partition(problem: &MomentProblem, lambda: &[f64], budget: &IntegrationBudget) -> Result<(f64, f64)> {
    let f = family_integrals(problem, lambda, budget)?;
    Ok((f.alpha, f.alpha_err))
}

/// `E_{pi_lambda}[phi_g]` for every constraint.
pub fn moments_under(problem: &MomentProblem, lambda: &[f64], budget: &IntegrationBudget) -> Result<Vec<f64>> {
    Ok(family_integrals(problem, lambda, budget)?.moments)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sq() -> MeasurementFunction {
        MeasurementFunction::power(1, 0, 2).unwrap()
    }

    fn x() -> MeasurementFunction {
        MeasurementFunction::power(1, 0, 1).unwrap()
    }

    fn half_line() -> SupportSet {
        SupportSet::boxed(vec![0.0], vec![f64::INFINITY]).unwrap()
    }

    #[test]
    fn gaussian_integral() {
        let req = IntegrationRequest::new(SupportSet::full(1).unwrap(), vec![(0.5, sq())]);
        let r = integrate(&req).unwrap();
        let exact = (2.0 * PI).sqrt();
        assert!(((r.value - exact) / exact).abs() < 1e-6);
        assert_eq!(r.method, Method::Adaptive1d);
        assert!(r.converged);
    }

    #[test]
    fn gamma_two_moment() {
        let req = IntegrationRequest::new(half_line(), vec![(1.0, x())]).weight(x());
        let r = integrate(&req).unwrap();
        assert!((r.value - 1.0).abs() < 1e-9, "{}", r.value);
    }

    #[test]
    fn box_volume_without_exponent() {
        let req = IntegrationRequest::new(SupportSet::boxed(vec![0.0], vec![2.0]).unwrap(), vec![]);
        assert!((integrate(&req).unwrap().value - 2.0).abs() < 1e-14);
    }

    #[test]
    fn linear_exponent_on_line_diverges() {
        let req = IntegrationRequest::new(SupportSet::full(1).unwrap(), vec![(1.0, x())]);
        assert!(matches!(integrate(&req), Err(Error::DivergentIntegral { .. })));
    }

    #[test]
    fn small_budget_rejected() {
        let req = IntegrationRequest::new(half_line(), vec![(1.0, x())]).budget(IntegrationBudget {
            max_evaluations: 999,
            ..Default::default()
        });
        assert!(integrate(&req).is_err());
    }

    #[test]
    fn log_partition_examples() {
        let b = IntegrationBudget::default();
        let p = MomentProblem::new(half_line(), vec![(x(), 1.0)]).unwrap();
        assert!(log_partition(&p, &[1.0], &b).unwrap().0.abs() < 1e-10);
        let g = MomentProblem::new(SupportSet::full(1).unwrap(), vec![(sq(), 1.0)]).unwrap();
        let (a, _) = log_partition(&g, &[0.5], &b).unwrap();
        assert!((a - 0.5 * (2.0 * PI).ln()).abs() < 1e-10);
        let abs = MeasurementFunction::abs_power(1, 0, 1.0).unwrap();
        let l = MomentProblem::new(SupportSet::full(1).unwrap(), vec![(abs, 1.0)]).unwrap();
        assert!((log_partition(&l, &[1.0], &b).unwrap().0 - 2f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn log_partition_divergent_when_all_zero() {
        let g = MomentProblem::new(SupportSet::full(1).unwrap(), vec![(sq(), 1.0)]).unwrap();
        assert!(matches!(log_partition(&g, &[0.0], &IntegrationBudget::default()), Err(Error::DivergentPartition(_))));
    }

    #[test]
    fn moments_examples() {
        let b = IntegrationBudget::default();
        let p = MomentProblem::new(half_line(), vec![(x(), 1.0)]).unwrap();
        assert!((moments_under(&p, &[2.0], &b).unwrap()[0] - 0.5).abs() < 1e-10);
        let g = MomentProblem::new(SupportSet::full(1).unwrap(), vec![(sq(), 1.0)]).unwrap();
        assert!((moments_under(&g, &[0.5], &b).unwrap()[0] - 1.0).abs() < 1e-10);
        let ind = MeasurementFunction::indicator_complement(vec![0.0], vec![1.0]).unwrap();
        let u = MomentProblem::new(SupportSet::boxed(vec![0.0], vec![2.0]).unwrap(), vec![(ind, 0.7)]).unwrap();
        assert!((moments_under(&u, &[0.0], &b).unwrap()[0] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn huge_multipliers_stay_finite() {
        let b = IntegrationBudget::default();
        let p = MomentProblem::new(half_line(), vec![(x(), 1.0)]).unwrap();
        let (a, _) = log_partition(&p, &[1e6], &b).unwrap();
        assert!((a + 1e6f64.ln()).abs() < 1e-8);
        let shifted = MeasurementFunction::callback(1, "x+1000", crate::measurements::Attributes::bounded_below(1000.0), |x| x[0] + 1000.0).unwrap();
        let q = MomentProblem::new(half_line(), vec![(shifted, 1001.0)]).unwrap();
        let (a, _) = log_partition(&q, &[1.0], &b).unwrap();
        assert!((a + 1000.0).abs() < 1e-8, "{a}");
    }

    #[test]
    fn monte_carlo_four_dimensional_gaussian() {
        let s = SupportSet::full(4).unwrap();
        let n2 = MeasurementFunction::norm_power(4, 2.0).unwrap();
        let req = IntegrationRequest::new(s, vec![(0.5, n2)]).budget(IntegrationBudget { max_evaluations: 40_000, ..Default::default() });
        let r = integrate(&req).unwrap();
        assert_eq!(r.method, Method::MonteCarlo);
        let exact = (2.0 * PI).powi(2);
        assert!(((r.value - exact) / exact).abs() < 0.02, "{} vs {exact}", r.value);
        assert_eq!(integrate(&req).unwrap(), r);
    }

    #[test]
    fn monte_carlo_norm_exponent() {
        // int_{R^4} exp(-|x|) = 2 pi^2 * Gamma(4) = 12 pi^2
        let s = SupportSet::full(4).unwrap();
        let n1 = MeasurementFunction::norm_power(4, 1.0).unwrap();
        let req = IntegrationRequest::new(s, vec![(1.0, n1)]).budget(IntegrationBudget { max_evaluations: 200_000, ..Default::default() });
        let r = integrate(&req).unwrap();
        let exact = 12.0 * PI * PI;
        assert!(((r.value - exact) / exact).abs() < 0.03, "{} vs {exact}", r.value);
        assert!((r.value - exact).abs() < 5.0 * r.abs_error_estimate + 0.01 * exact);
    }
}
