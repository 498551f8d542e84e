//! Seeded importance sampling for dimensions where tensor cubature is too
//! expensive. The proposal starts as a Laplace match at the mode and is
//! refined by a few weighted moment-matching rounds.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::measurements::SupportSet;

use super::laplace::{diagonal_hessian, locate_minimizer};
use super::{IntegrationBudget, Integrand, Method, VectorIntegral};

/// Relative accuracy below which Monte Carlo is never asked to go.
pub(crate) const MC_TOL_FLOOR: f64 = 1e-3;
const PILOT_ROUNDS: usize = 3;
const WIDE_WEIGHT: f64 = 0.2;

/// Diagonal Gaussian mixture `(1-w) N(mu, s^2) + w N(mu, (2s)^2)`.
#[derive(Debug, Clone)]
pub(crate) struct Proposal {
    pub mean: Vec<f64>,
    pub sigma: Vec<f64>,
}

impl Proposal {
    pub(crate) fn draw(&self, rng: &mut ChaCha8Rng, out: &mut [f64]) {
        let wide = rng.random::<f64>() < WIDE_WEIGHT;
        let k = if wide { 2.0 } else { 1.0 };
        for i in 0..out.len() {
            let z: f64 = rng.sample(StandardNormal);
            out[i] = self.mean[i] + k * self.sigma[i] * z;
        }
    }

    pub(crate) fn log_density(&self, x: &[f64]) -> f64 {
        let d = x.len() as f64;
        let mut q1 = -0.5 * d * (2.0 * std::f64::consts::PI).ln();
        let mut q2 = q1 - d * 2f64.ln();
        for i in 0..x.len() {
            let z = (x[i] - self.mean[i]) / self.sigma[i];
            q1 += -0.5 * z * z - self.sigma[i].ln();
            q2 += -0.125 * z * z - self.sigma[i].ln();
        }
        let a = (1.0 - WIDE_WEIGHT).ln() + q1;
        let b = WIDE_WEIGHT.ln() + q2;
        let m = a.max(b);
        m + ((a - m).exp() + (b - m).exp()).ln()
    }
}

pub(crate) fn rng_for(seed: u64, ordinal: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(ordinal);
    rng
}

struct Draws {
    log_w: Vec<f64>,
    points: Vec<f64>,
    values: Vec<f64>,
}

fn draw_batch(
    integrand: &Integrand<'_>,
    proposal: &Proposal,
    shift: f64,
    n: usize,
    rng: &mut ChaCha8Rng,
) -> Draws {
    let d = proposal.mean.len();
    let comps = integrand.components();
    let mut scratch = vec![0.0; integrand.functions.len()];
    let mut x = vec![0.0; d];
    let mut vals = vec![0.0; comps];
    let mut out = Draws {
        log_w: Vec::with_capacity(n),
        points: Vec::with_capacity(n * d),
        values: Vec::with_capacity(n * comps),
    };
    for _ in 0..n {
        proposal.draw(rng, &mut x);
        let lw = match integrand.eval(&x, &mut scratch, &mut vals) {
            Some(e) => shift - e - proposal.log_density(&x),
            None => f64::NEG_INFINITY,
        };
        out.log_w.push(lw);
        out.points.extend_from_slice(&x);
        if lw.is_finite() {
            out.values.extend_from_slice(&vals);
        } else {
            out.values.extend(std::iter::repeat_n(0.0, comps));
        }
    }
    out
}

fn normalised(log_w: &[f64]) -> (Vec<f64>, f64) {
    let m = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w = log_w.iter().map(|lw| if lw.is_finite() { (lw - m).exp() } else { 0.0 }).collect();
    (w, m)
}

pub(crate) fn laplace_proposal(integrand: &Integrand<'_>, support: &SupportSet) -> (Proposal, f64) {
    let (mode, e_min) = locate_minimizer(integrand, support);
    let hess = diagonal_hessian(integrand, support, &mode);
    let sigma = hess.iter().map(|h| 1.0 / h.sqrt()).collect();
    (Proposal { mean: mode, sigma }, e_min)
}

pub(crate) fn importance(
    integrand: &Integrand<'_>,
    support: &SupportSet,
    budget: &IntegrationBudget,
    ordinal: u64,
) -> Result<VectorIntegral> {
    let d = support.dimension();
    let comps = integrand.components();
    let (mut proposal, shift) = laplace_proposal(integrand, support);
    let mode = proposal.mean.clone();
    if !shift.is_finite() || shift < -1e12 {
        return Err(Error::DivergentIntegral { radius: f64::INFINITY });
    }
    let mut rng = rng_for(budget.seed, ordinal);
    let n = budget.max_evaluations;
    let pilot = (n / 8).max(500);
    for _ in 0..PILOT_ROUNDS {
        let draws = draw_batch(integrand, &proposal, shift, pilot, &mut rng);
        let (w, _) = normalised(&draws.log_w);
        let sw: f64 = w.iter().sum();
        let sw2: f64 = w.iter().map(|v| v * v).sum();
        if sw == 0.0 {
            proposal.sigma.iter_mut().for_each(|s| *s *= 2.0);
            continue;
        }
        let ess = sw * sw / sw2;
        if ess < 50.0 {
            proposal.sigma.iter_mut().for_each(|s| *s *= 2.0);
            continue;
        }
        for i in 0..d {
            let mean = (0..pilot).map(|k| w[k] * draws.points[k * d + i]).sum::<f64>() / sw;
            let var = (0..pilot)
                .map(|k| w[k] * (draws.points[k * d + i] - mean).powi(2))
                .sum::<f64>()
                / sw;
            proposal.mean[i] = mean;
            proposal.sigma[i] = (1.2 * var).max(1e-24).sqrt();
        }
    }

    let n_final = n.saturating_sub(PILOT_ROUNDS * pilot).max(1000);
    let draws = draw_batch(integrand, &proposal, shift, n_final, &mut rng);
    let (w, lw_max) = normalised(&draws.log_w);
    if !lw_max.is_finite() {
        return Err(Error::DivergentIntegral { radius: f64::INFINITY });
    }
    let nf = n_final as f64;
    let mut values = vec![0.0; comps];
    let mut abs = vec![0.0; comps];
    let mut sq = vec![0.0; comps];
    for k in 0..n_final {
        for c in 0..comps {
            let f = w[k] * draws.values[k * comps + c];
            values[c] += f;
            abs[c] += f.abs();
            sq[c] += f * f;
        }
    }
    let mut errors = vec![0.0; comps];
    for c in 0..comps {
        values[c] /= nf;
        abs[c] /= nf;
        let var = (sq[c] / nf - values[c] * values[c]).max(0.0);
        errors[c] = (var / nf).sqrt();
    }
    let converged = errors[0] <= budget.rel_tol.max(MC_TOL_FLOOR) * values[0];
    let mut lo = vec![0.0; d];
    let mut hi = vec![0.0; d];
    for i in 0..d {
        lo[i] = proposal.mean[i] - 12.0 * proposal.sigma[i];
        hi[i] = proposal.mean[i] + 12.0 * proposal.sigma[i];
    }
    let radius = proposal.sigma.iter().fold(0.0f64, |a, s| a.max(12.0 * s));
    Ok(VectorIntegral {
        log_scale: lw_max - shift,
        values,
        errors,
        evaluations: PILOT_ROUNDS * pilot + n_final,
        method: Method::MonteCarlo,
        truncation_radius: radius,
        truncation_box: clip_box(support, lo, hi),
        converged,
        mode,
        min_energy: shift,
    })
}

fn clip_box(support: &SupportSet, mut lo: Vec<f64>, mut hi: Vec<f64>) -> (Vec<f64>, Vec<f64>) {
    let (blo, bhi) = support.bounding_box();
    for i in 0..lo.len() {
        lo[i] = lo[i].max(blo[i]);
        hi[i] = hi[i].min(bhi[i]);
    }
    (lo, hi)
}
