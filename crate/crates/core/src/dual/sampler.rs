//! Pointwise density and rejection sampling from a solved problem.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::lowdisc::{scale_into, Halton};
use crate::measurements::{MomentProblem, Point};
use crate::quadrature::laplace::{diagonal_hessian, locate_minimizer};
use crate::quadrature::monte_carlo::{rng_for, Proposal};
use crate::quadrature::Integrand;

use super::DualSolution;

/// Acceptance rate below which the sampler gives up.
pub const ACCEPTANCE_FLOOR: f64 = 1e-4;
/// Trials after which the acceptance floor is enforced.
pub const COLLAPSE_TRIALS: usize = 100_000;
const GAUSSIAN_WEIGHT: f64 = 0.9;
const ENVELOPE_MARGIN: f64 = 1.2;

fn check_point(problem: &MomentProblem, solution: &DualSolution, x: &Point) -> Result<()> {
    if x.dim() != problem.dimension() {
        return Err(Error::DimensionMismatch { expected: problem.dimension(), found: x.dim() });
    }
    if solution.lambda.len() != problem.len() {
        return Err(Error::LengthMismatch { expected: problem.len(), found: solution.lambda.len() });
    }
    Ok(())
}

fn log_density(problem: &MomentProblem, solution: &DualSolution, x: &[f64]) -> f64 {
    if !problem.support().contains(x) {
        return f64::NEG_INFINITY;
    }
    let energy: f64 = problem
        .constraints()
        .iter()
        .zip(&solution.lambda)
        .filter(|(_, l)| **l != 0.0)
        .map(|(c, l)| l * c.function.value(x))
        .sum();
    -solution.alpha - energy
}

/// `1_S(x) exp(-alpha - sum lambda_g phi_g(x))`.
pub fn density_at(solution: &DualSolution, problem: &MomentProblem, x: &Point) -> Result<f64> {
    check_point(problem, solution, x)?;
    Ok(log_density(problem, solution, x.coords()).exp())
}

/// Mixture of a Laplace-matched Gaussian and a uniform over the
/// truncation box.
struct Envelope {
    gaussian: Proposal,
    lo: Vec<f64>,
    hi: Vec<f64>,
    log_uniform: f64,
}

impl Envelope {
    fn log_q(&self, x: &[f64]) -> f64 {
        let a = GAUSSIAN_WEIGHT.ln() + self.gaussian.log_density(x);
        let b = (1.0 - GAUSSIAN_WEIGHT).ln() + self.log_uniform;
        let m = a.max(b);
        m + ((a - m).exp() + (b - m).exp()).ln()
    }

    fn draw(&self, rng: &mut ChaCha8Rng, x: &mut [f64]) {
        if rng.random::<f64>() < GAUSSIAN_WEIGHT {
            self.gaussian.draw(rng, x);
        } else {
            for i in 0..x.len() {
                x[i] = self.lo[i] + (self.hi[i] - self.lo[i]) * rng.random::<f64>();
            }
        }
    }

    fn inside(&self, x: &[f64]) -> bool {
        x.iter().zip(self.lo.iter().zip(&self.hi)).all(|(v, (a, b))| a <= v && v <= b)
    }
}

fn envelope(solution: &DualSolution, problem: &MomentProblem) -> Result<Envelope> {
    let (lo, hi) = solution.truncation_box.clone();
    if lo.len() != problem.dimension() || lo.iter().chain(&hi).any(|v| !v.is_finite()) || lo.iter().zip(&hi).any(|(a, b)| a >= b) {
        return Err(Error::InvalidProblem("solution carries no finite truncation box to sample from".into()));
    }
    let support = problem.support();
    let terms = problem.constraints().iter().zip(&solution.lambda).map(|(c, l)| (&c.function, *l)).collect();
    let integrand = Integrand::new(support, terms, Vec::new());
    let (mut mode, _) = locate_minimizer(&integrand, support);
    for i in 0..mode.len() {
        mode[i] = mode[i].clamp(lo[i], hi[i]);
    }
    let hess = diagonal_hessian(&integrand, support, &mode);
    let sigma = hess.iter().enumerate().map(|(i, h)| (1.0 / h.sqrt()).min(0.5 * (hi[i] - lo[i]))).collect();
    let log_volume: f64 = lo.iter().zip(&hi).map(|(a, b)| (b - a).ln()).sum();
    Ok(Envelope { gaussian: Proposal { mean: mode, sigma }, lo, hi, log_uniform: -log_volume })
}

/// Largest log target-to-proposal ratio over a grid of the box.
fn log_bound(problem: &MomentProblem, solution: &DualSolution, env: &Envelope) -> f64 {
    let d = problem.dimension();
    let ratio = |x: &[f64]| log_density(problem, solution, x) - env.log_q(x);
    let mut best = ratio(&env.gaussian.mean);
    let mut x = vec![0.0; d];
    if d <= 3 {
        let per_axis = 64usize;
        let total = per_axis.pow(d as u32);
        for k in 0..total {
            let mut rem = k;
            for i in 0..d {
                let j = rem % per_axis;
                rem /= per_axis;
                x[i] = env.lo[i] + (j as f64 + 0.5) / per_axis as f64 * (env.hi[i] - env.lo[i]);
            }
            best = best.max(ratio(&x));
        }
    } else {
        let mut h = Halton::new(d, 0);
        let mut u = vec![0.0; d];
        for _ in 0..4096 {
            h.next_into(&mut u);
            scale_into(&u, &env.lo, &env.hi, &mut x);
            best = best.max(ratio(&x));
        }
    }
    best + ENVELOPE_MARGIN.ln()
}

/// Draws `n` independent points from the solution density restricted to its
/// truncation box, by rejection from a Laplace-matched proposal.
///
/// The envelope constant is estimated on a grid and raised whenever a
/// larger target-to-proposal ratio turns up during sampling.
pub fn sample(solution: &DualSolution, problem: &MomentProblem, n: usize, seed: u64) -> Result<Vec<Point>> {
    if n == 0 {
        return Err(Error::InvalidProblem("sample size must be at least 1".into()));
    }
    if solution.lambda.len() != problem.len() {
        return Err(Error::LengthMismatch { expected: problem.len(), found: solution.lambda.len() });
    }
    let env = envelope(solution, problem)?;
    let mut log_m = log_bound(problem, solution, &env);
    let d = problem.dimension();
    let mut rng = rng_for(seed, 1);
    let mut x = vec![0.0; d];
    let mut out = Vec::with_capacity(n);
    let mut trials = 0usize;
    while out.len() < n {
        trials += 1;
        if trials >= COLLAPSE_TRIALS {
            let rate = out.len() as f64 / trials as f64;
            if rate < ACCEPTANCE_FLOOR {
                return Err(Error::AcceptanceCollapse { rate, trials });
            }
        }
        env.draw(&mut rng, &mut x);
        let u: f64 = rng.random();
        if !env.inside(&x) {
            continue;
        }
        let lr = log_density(problem, solution, &x) - env.log_q(&x);
        if lr == f64::NEG_INFINITY {
            continue;
        }
        if lr > log_m {
            log_m = lr + ENVELOPE_MARGIN.ln();
        }
        if u.ln() < lr - log_m {
            out.push(Point::new(x.clone())?);
        }
    }
    Ok(out)
}
