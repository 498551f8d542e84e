//! Measurement functions, support sets and the moment problem, plus the
//! structural checks (stability, well-behavedness) that existence of a
//! maximum-entropy solution depends on.

mod function;
pub(crate) mod problem;
mod support;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate, IntegrationBudget, IntegrationRequest};

pub use function::{evaluate, Attributes, FunctionKind, MeasurementFunction, Point};
pub use problem::{combine, equality_pair, Constraint, MomentProblem};
pub use support::{HalfSpace, SupportSet, SupportShape};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StabilityVerdict {
    Stable,
    /// Tail mass kept growing as the truncation radius doubled.
    Divergent,
    /// Budget ran out before the tails settled.
    Undetermined,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityEntry {
    pub lambda: f64,
    pub verdict: StabilityVerdict,
    /// `ln int_S exp(-lambda phi)` when it was computed.
    pub log_z: Option<f64>,
}

impl StabilityEntry {
    pub fn z(&self) -> Option<f64> {
        self.log_z.map(f64::exp)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    /// Stability follows from declared convexity and coercivity or
    /// well-behavedness.
    pub structural: bool,
    pub entries: Vec<StabilityEntry>,
}

impl StabilityReport {
    pub fn is_stable(&self) -> bool {
        self.entries.iter().all(|e| e.verdict == StabilityVerdict::Stable)
    }
}

/// Decides whether `exp(-lambda phi)` is integrable over the support for
/// each given `lambda`.
///
/// Structural declarations short-circuit the verdict; the partition value
/// is still estimated and reported when the quadrature manages it.
pub fn check_stable(
    phi: &MeasurementFunction,
    support: &SupportSet,
    lambdas: &[f64],
    budget: &IntegrationBudget,
) -> Result<StabilityReport> {
    if lambdas.is_empty() {
        return Err(Error::InvalidProblem("at least one multiplier is required".into()));
    }
    if let Some(bad) = lambdas.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
        return Err(Error::InvalidMultipliers(format!("stability multipliers must be positive, got {bad}")));
    }
    if phi.dimension() != support.dimension() {
        return Err(Error::DimensionMismatch { expected: support.dimension(), found: phi.dimension() });
    }
    let structural = phi.attributes().structurally_stable();
    let mut entries = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let req = IntegrationRequest::new(support.clone(), vec![(lambda, phi.clone())]).budget(*budget);
        let (verdict, log_z) = match integrate(&req) {
            Ok(r) if r.converged && r.value.is_finite() => (StabilityVerdict::Stable, Some(r.log_value)),
            Ok(r) => (
                if structural { StabilityVerdict::Stable } else { StabilityVerdict::Undetermined },
                r.value.is_finite().then_some(r.log_value),
            ),
            Err(Error::DivergentIntegral { .. }) if !structural => (StabilityVerdict::Divergent, None),
            Err(_) if structural => (StabilityVerdict::Stable, None),
            Err(_) => (StabilityVerdict::Undetermined, None),
        };
        entries.push(StabilityEntry { lambda, verdict, log_z });
    }
    Ok(StabilityReport { structural, entries })
}

/// How densely [`check_well_behaved`] probes a function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingPlan {
    /// Points drawn inside the ball of radius `M`.
    pub ball_samples: usize,
    /// Random rays along which growth is checked.
    pub rays: usize,
    /// Geometric radii per ray, doubling from `M + 1`.
    pub ray_steps: usize,
    pub seed: u64,
}

impl Default for SamplingPlan {
    fn default() -> Self {
        Self { ball_samples: 4096, rays: 64, ray_steps: 20, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WellBehavedReport {
    pub radius: f64,
    pub ball_samples: usize,
    pub rays: usize,
    /// Largest `|phi|` seen inside the ball.
    pub max_abs_in_ball: f64,
    /// Smallest secant slope over the outermost step of any ray.
    pub min_final_slope: f64,
    /// Always empty when returned; violations are reported as an error.
    pub violations: Vec<String>,
}

/// Spot-checks a well-behavedness declaration by sampling: boundedness
/// inside the ball of radius `M` and eventual growth along random rays.
pub fn check_well_behaved(phi: &MeasurementFunction, plan: &SamplingPlan) -> Result<WellBehavedReport> {
    let attrs = phi.attributes();
    let declared_radius = attrs.well_behaved_radius.filter(|m| m.is_finite() && *m >= 0.0);
    let radius = match declared_radius {
        Some(m) if attrs.is_well_behaved => m,
        _ if attrs.is_convex && attrs.is_coercive => declared_radius.unwrap_or(0.0),
        _ if attrs.is_well_behaved => {
            return Err(Error::NotDeclared(format!("`{}` declares well-behavedness without a radius", phi.name())))
        }
        _ => {
            return Err(Error::NotDeclared(format!(
                "`{}` is neither declared well-behaved nor convex and coercive",
                phi.name()
            )))
        }
    };
    let d = phi.dimension();
    let mut rng = crate::quadrature::monte_carlo::rng_for(plan.seed, 0);
    let mut violations = Vec::new();
    let mut dir = vec![0.0; d];
    let mut x = vec![0.0; d];
    let unit_direction = |rng: &mut rand_chacha::ChaCha8Rng, dir: &mut [f64]| loop {
        for v in dir.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        let n = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
        if n > 1e-12 {
            dir.iter_mut().for_each(|v| *v /= n);
            break;
        }
    };

    let mut max_abs: f64 = 0.0;
    for k in 0..plan.ball_samples {
        unit_direction(&mut rng, &mut dir);
        let r = radius * rng.random::<f64>().powf(1.0 / d as f64);
        for i in 0..d {
            x[i] = r * dir[i];
        }
        let v = phi.value(&x);
        if !v.is_finite() {
            violations.push(format!("non-finite value inside radius {radius} at sample {k}"));
            break;
        }
        if v < attrs.lower_bound {
            violations.push(format!("value {v} below declared lower bound {}", attrs.lower_bound));
            break;
        }
        max_abs = max_abs.max(v.abs());
    }

    let mut min_final_slope = f64::INFINITY;
    for ray in 0..plan.rays {
        unit_direction(&mut rng, &mut dir);
        let mut r = radius + 1.0;
        let mut values = Vec::with_capacity(plan.ray_steps + 1);
        let mut radii = Vec::with_capacity(plan.ray_steps + 1);
        for _ in 0..=plan.ray_steps {
            for i in 0..d {
                x[i] = r * dir[i];
            }
            values.push(phi.value(&x));
            radii.push(r);
            r *= 2.0;
        }
        if values.iter().any(|v| v.is_nan()) {
            violations.push(format!("ray {ray}: NaN value"));
            continue;
        }
        let n = values.len();
        let slope = |k: usize| {
            if values[k] == f64::INFINITY {
                f64::INFINITY
            } else {
                (values[k] - values[k - 1]) / (radii[k] - radii[k - 1])
            }
        };
        let final_slope = slope(n - 1);
        min_final_slope = min_final_slope.min(final_slope);
        let rising = (n - 3..n).all(|k| slope(k) > 0.0);
        if !(final_slope > 0.0) || !rising {
            violations.push(format!(
                "ray {ray}: no sustained growth beyond radius {radius} (final secant slope {final_slope:e})"
            ));
        }
    }

    if !violations.is_empty() {
        return Err(Error::DeclarationInconsistent { violations });
    }
    Ok(WellBehavedReport {
        radius,
        ball_samples: plan.ball_samples,
        rays: plan.rays,
        max_abs_in_ball: max_abs,
        min_final_slope,
        violations,
    })
}
