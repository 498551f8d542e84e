use std::f64::consts::{E, PI};
use std::fmt;
use std::sync::Arc;

use crate::measurements::{MeasurementFunction, MomentProblem, SupportSet};

type Density = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A moment problem whose maximum-entropy solution is known in closed form.
#[derive(Clone)]
pub struct AnalyticFixture {
    pub name: &'static str,
    pub problem: MomentProblem,
    pub lambda_true: Vec<f64>,
    pub alpha_true: f64,
    pub entropy_true: f64,
    /// Box holding all but a negligible part of the mass, for grid solves.
    pub truncation: (Vec<f64>, Vec<f64>),
    density: Density,
}

impl fmt::Debug for AnalyticFixture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AnalyticFixture")
            .field("name", &self.name)
            .field("lambda_true", &self.lambda_true)
            .field("alpha_true", &self.alpha_true)
            .field("entropy_true", &self.entropy_true)
            .finish()
    }
}

impl AnalyticFixture {
    pub fn density(&self, x: &[f64]) -> f64 {
        (self.density)(x)
    }

    pub fn has_active_constraint(&self) -> bool {
        self.lambda_true.iter().any(|l| *l > 0.0)
    }
}

fn x() -> MeasurementFunction {
    MeasurementFunction::power(1, 0, 1).expect("valid power")
}

fn fixture(
    name: &'static str,
    support: SupportSet,
    constraints: Vec<(MeasurementFunction, f64)>,
    lambda: f64,
    alpha: f64,
    entropy: f64,
    truncation: (f64, f64),
    density: impl Fn(f64) -> f64 + Send + Sync + 'static,
) -> AnalyticFixture {
    let lambda_true = if constraints.is_empty() { Vec::new() } else { vec![lambda] };
    AnalyticFixture {
        name,
        problem: MomentProblem::new(support, constraints).expect("fixture problems are admissible"),
        lambda_true,
        alpha_true: alpha,
        entropy_true: entropy,
        truncation: (vec![truncation.0], vec![truncation.1]),
        density: Arc::new(move |p: &[f64]| density(p[0])),
    }
}

/// Mean of `lambda e^{-lambda x}` restricted to `[0, t]`.
fn truncated_exponential_mean(lambda: f64, t: f64) -> f64 {
    1.0 / lambda - t / (lambda * t).exp_m1()
}

/// Uniform on `[0, 2]`, exponential with mean 1, standard Gaussian,
/// Laplace with scale 1, and an exponential truncated to `[0, 3]` with
/// multiplier 2.
pub fn analytic_fixtures() -> Vec<AnalyticFixture> {
    let half_line = || SupportSet::boxed(vec![0.0], vec![f64::INFINITY]).expect("valid box");
    let line = || SupportSet::full(1).expect("valid dimension");

    let uniform = fixture(
        "uniform",
        SupportSet::boxed(vec![0.0], vec![2.0]).expect("valid box"),
        Vec::new(),
        0.0,
        2f64.ln(),
        2f64.ln(),
        (0.0, 2.0),
        |v| if (0.0..=2.0).contains(&v) { 0.5 } else { 0.0 },
    );

    let m = 1.0;
    let exponential = fixture(
        "exponential",
        half_line(),
        vec![(x(), m)],
        1.0 / m,
        m.ln(),
        1.0 + m.ln(),
        (0.0, 40.0),
        move |v| if v >= 0.0 { (-v / m).exp() / m } else { 0.0 },
    );

    let s2 = 1.0;
    let gaussian = fixture(
        "gaussian",
        line(),
        vec![(MeasurementFunction::power(1, 0, 2).expect("valid power"), s2)],
        0.5 / s2,
        0.5 * (2.0 * PI * s2).ln(),
        0.5 * (2.0 * PI * E * s2).ln(),
        (-10.0, 10.0),
        move |v| (-v * v / (2.0 * s2)).exp() / (2.0 * PI * s2).sqrt(),
    );

    let b = 1.0;
    let laplace = fixture(
        "laplace",
        line(),
        vec![(MeasurementFunction::abs_power(1, 0, 1.0).expect("valid power"), b)],
        1.0 / b,
        (2.0 * b).ln(),
        1.0 + (2.0 * b).ln(),
        (-40.0, 40.0),
        move |v| (-v.abs() / b).exp() / (2.0 * b),
    );

    let (lambda, t) = (2.0, 3.0);
    let u = truncated_exponential_mean(lambda, t);
    let alpha = (-(-lambda * t).exp_m1() / lambda).ln();
    let truncated = fixture(
        "truncated-exponential",
        SupportSet::boxed(vec![0.0], vec![t]).expect("valid box"),
        vec![(x(), u)],
        lambda,
        alpha,
        alpha + lambda * u,
        (0.0, t),
        move |v| if (0.0..=t).contains(&v) { (-alpha - lambda * v).exp() } else { 0.0 },
    );

    vec![uniform, exponential, gaussian, laplace, truncated]
}

/// Looks a fixture up by name.
pub fn fixture_named(name: &str) -> Option<AnalyticFixture> {
    analytic_fixtures().into_iter().find(|f| f.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn five_fixtures_with_expected_entropies() {
        let f = analytic_fixtures();
        assert_eq!(f.len(), 5);
        assert!((fixture_named("uniform").unwrap().entropy_true - std::f64::consts::LN_2).abs() < 1e-15);
        let e = fixture_named("exponential").unwrap();
        assert_eq!((e.lambda_true[0], e.entropy_true), (1.0, 1.0));
        let l = fixture_named("laplace").unwrap();
        assert!((l.entropy_true - 1.6931471805599454).abs() < 1e-15);
    }

    #[test]
    fn entropy_is_alpha_plus_lambda_u() {
        for f in analytic_fixtures() {
            let lu: f64 = f.lambda_true.iter().zip(f.problem.bounds()).map(|(l, u)| l * u).sum();
            assert!((f.entropy_true - (f.alpha_true + lu)).abs() < 1e-14, "{}", f.name);
        }
    }

    #[test]
    fn truncated_exponential_constraint_is_binding() {
        let f = fixture_named("truncated-exponential").unwrap();
        // Uniform on [0, 3] has mean 1.5, far above the bound.
        assert!(f.problem.bounds()[0] < 1.5);
        assert!((truncated_exponential_mean(1e-9, 3.0) - 1.5).abs() < 1e-6);
    }
}
