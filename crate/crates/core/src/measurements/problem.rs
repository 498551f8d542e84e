use crate::error::{Error, Result};
use crate::lowdisc::{scale_into, Halton};

use super::{MeasurementFunction, SupportSet};

/// Quasi-random points used to spot-check declared lower bounds at admission.
pub(crate) const ADMISSION_SAMPLES: usize = 10_000;
/// Half-width used to turn unbounded support directions into a sampling box.
pub(crate) const SEARCH_RADIUS: f64 = 16.0;

/// One moment constraint `E[phi] <= bound`.
#[derive(Debug, Clone)]
pub struct Constraint {
    pub function: MeasurementFunction,
    pub bound: f64,
    /// Lower bound of `phi` on the support (finite for admitted problems).
    pub lower_bound: f64,
}

/// The feasible set `{pi : supp(pi) in S, E_pi[phi_g] <= u_g for all g}`.
///
/// Construction enforces that every measurement is bounded below on the
/// support, which is what makes the feasible set closed in `L^1`.
#[derive(Debug, Clone)]
pub struct MomentProblem {
    support: SupportSet,
    constraints: Vec<Constraint>,
}

impl MomentProblem {
    pub fn new(support: SupportSet, constraints: Vec<(MeasurementFunction, f64)>) -> Result<Self> {
        let d = support.dimension();
        if constraints.is_empty() && !support.finite_volume() {
            return Err(Error::InvalidProblem(
                "an unconstrained problem needs a support of finite volume".into(),
            ));
        }
        let (blo, bhi) = support.bounding_box();
        let mut admitted = Vec::with_capacity(constraints.len());
        for (index, (function, bound)) in constraints.into_iter().enumerate() {
            if function.dimension() != d {
                return Err(Error::DimensionMismatch { expected: d, found: function.dimension() });
            }
            if !bound.is_finite() {
                return Err(Error::InvalidProblem(format!("constraint {index}: bound must be finite, got {bound}")));
            }
            let lower_bound = function.range_on_box(blo, bhi).0;
            if !lower_bound.is_finite() {
                return Err(Error::UnboundedBelow { index });
            }
            admitted.push(Constraint { function, bound, lower_bound });
        }
        let problem = Self { support, constraints: admitted };
        problem.spot_check_lower_bounds()?;
        Ok(problem)
    }

    fn spot_check_lower_bounds(&self) -> Result<()> {
        if self.constraints.is_empty() {
            return Ok(());
        }
        let d = self.dimension();
        let (lo, hi) = self.support.search_box(SEARCH_RADIUS);
        let mut h = Halton::new(d, 0);
        let (mut u, mut x) = (vec![0.0; d], vec![0.0; d]);
        for _ in 0..ADMISSION_SAMPLES {
            h.next_into(&mut u);
            scale_into(&u, &lo, &hi, &mut x);
            if !self.support.contains(&x) {
                continue;
            }
            for (index, c) in self.constraints.iter().enumerate() {
                let v = c.function.value(&x);
                if !v.is_finite() {
                    return Err(Error::NonFiniteValue { name: c.function.name() });
                }
                if v < c.lower_bound {
                    return Err(Error::LowerBoundViolated { index, value: v, bound: c.lower_bound });
                }
            }
        }
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        self.support.dimension()
    }

    pub fn support(&self) -> &SupportSet {
        &self.support
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    pub fn bounds(&self) -> Vec<f64> {
        self.constraints.iter().map(|c| c.bound).collect()
    }

    /// Uniform lower bound `L = min_g L_g`.
    pub fn lower_bound(&self) -> f64 {
        self.constraints.iter().map(|c| c.lower_bound).fold(f64::INFINITY, f64::min)
    }

    /// Same functions with new bounds.
    pub fn with_bounds(&self, bounds: &[f64]) -> Result<Self> {
        if bounds.len() != self.len() {
            return Err(Error::LengthMismatch { expected: self.len(), found: bounds.len() });
        }
        let pairs = self
            .constraints
            .iter()
            .zip(bounds)
            .map(|(c, &u)| (c.function.clone(), u))
            .collect();
        Self::new(self.support.clone(), pairs)
    }

    /// Appends the redundant constraint `sum mu_g phi_g <= sum mu_g u_g`.
    pub fn combine_for_stability(&self, weights: &[f64]) -> Result<(MeasurementFunction, f64)> {
        let pairs: Vec<_> = self.constraints.iter().map(|c| (c.function.clone(), c.bound)).collect();
        combine(&pairs, weights)
    }

    /// Problem with the combined constraint appended.
    pub fn with_combined_constraint(&self, weights: &[f64]) -> Result<Self> {
        let extra = self.combine_for_stability(weights)?;
        let mut pairs: Vec<_> = self.constraints.iter().map(|c| (c.function.clone(), c.bound)).collect();
        pairs.push(extra);
        Self::new(self.support.clone(), pairs)
    }
}

/// Nonnegative combination `(sum mu_g phi_g, sum mu_g u_g)` of constraints.
///
/// Works on raw pairs so that constraints which are not individually
/// admissible (e.g. unbounded below) can still be combined.
pub fn combine(constraints: &[(MeasurementFunction, f64)], weights: &[f64]) -> Result<(MeasurementFunction, f64)> {
    if weights.len() != constraints.len() {
        return Err(Error::LengthMismatch { expected: constraints.len(), found: weights.len() });
    }
    if let Some((index, &weight)) = weights.iter().enumerate().find(|(_, w)| !(w.is_finite() && **w >= 0.0)) {
        return Err(Error::InvalidWeight { index, weight });
    }
    if weights.iter().all(|w| *w == 0.0) {
        return Err(Error::InvalidProblem("combination weights are all zero".into()));
    }
    let terms = constraints.iter().zip(weights).map(|((f, _), &w)| (w, f.clone())).collect();
    let bound = constraints.iter().zip(weights).map(|((_, u), w)| w * u).sum();
    Ok((MeasurementFunction::linear_combination(terms)?, bound))
}

/// Encodes `E[phi] = value` as the pair `phi <= value`, `-phi <= -value`.
pub fn equality_pair(phi: MeasurementFunction, value: f64) -> [(MeasurementFunction, f64); 2] {
    let neg = MeasurementFunction::negated(phi.clone());
    [(phi, value), (neg, -value)]
}
