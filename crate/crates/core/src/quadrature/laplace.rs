//! Mode search and curvature of the exponent `E(x) = sum lambda_g phi_g(x)`,
//! used to centre truncation boxes and to build Gaussian proposals.

use crate::lowdisc::{scale_into, Halton};
use crate::measurements::problem::SEARCH_RADIUS;
use crate::measurements::SupportSet;

use super::Integrand;

/// Diagonal-Hessian floor for the Laplace proposal.
pub(crate) const HESSIAN_FLOOR: f64 = 1e-6;

/// Approximate minimiser of the energy over the support: quasi-random
/// seeding followed by a compass (pattern) search clipped to the support.
pub(crate) fn locate_minimizer(integrand: &Integrand<'_>, support: &SupportSet) -> (Vec<f64>, f64) {
    let d = support.dimension();
    let mut scratch = vec![0.0; integrand.functions.len()];
    let mut energy = |x: &[f64]| integrand.energy(x, &mut scratch).unwrap_or(f64::INFINITY);
    let (lo, hi) = support.search_box(SEARCH_RADIUS);

    let mut best = vec![0.0; d];
    support.clamp_into_box(&mut best);
    let mut best_e = energy(&best);
    let mut h = Halton::new(d, 7919);
    let (mut u, mut x) = (vec![0.0; d], vec![0.0; d]);
    for _ in 0..(128 * d).min(4096) {
        h.next_into(&mut u);
        scale_into(&u, &lo, &hi, &mut x);
        let e = energy(&x);
        if e < best_e {
            best_e = e;
            best.copy_from_slice(&x);
        }
    }

    let mut step: Vec<f64> = (0..d).map(|i| (hi[i] - lo[i]) / 32.0).collect();
    let mut evals = 0usize;
    let mut trial = best.clone();
    while evals < 20_000 {
        let mut improved = false;
        for i in 0..d {
            for dir in [1.0, -1.0] {
                trial.copy_from_slice(&best);
                trial[i] += dir * step[i];
                support.clamp_into_box(&mut trial);
                let e = energy(&trial);
                evals += 1;
                if e < best_e {
                    best_e = e;
                    best.copy_from_slice(&trial);
                    improved = true;
                }
            }
        }
        if !improved {
            let mut done = true;
            for i in 0..d {
                step[i] *= 0.5;
                if step[i] > 1e-10 * (1.0 + best[i].abs()) {
                    done = false;
                }
            }
            if done {
                break;
            }
        }
    }
    (best, best_e)
}

/// Central-difference diagonal of the energy Hessian at `x`, floored.
/// One-sided stencils are shifted to stay inside the support.
pub(crate) fn diagonal_hessian(integrand: &Integrand<'_>, support: &SupportSet, x: &[f64]) -> Vec<f64> {
    let d = x.len();
    let mut scratch = vec![0.0; integrand.functions.len()];
    let (blo, bhi) = support.bounding_box();
    let mut out = vec![HESSIAN_FLOOR; d];
    let mut p = x.to_vec();
    for i in 0..d {
        let h = 1e-3 * (1.0 + x[i].abs());
        let mut c = x[i];
        if c - h < blo[i] {
            c = blo[i] + h;
        }
        if c + h > bhi[i] {
            c = bhi[i] - h;
        }
        let mut at = |v: f64, p: &mut Vec<f64>| {
            p[i] = v;
            integrand.energy(p, &mut scratch)
        };
        if let (Some(fm), Some(f0), Some(fp)) = (at(c - h, &mut p), at(c, &mut p), at(c + h, &mut p)) {
            let second = (fp - 2.0 * f0 + fm) / (h * h);
            if second.is_finite() {
                out[i] = second.max(HESSIAN_FLOOR);
            }
        }
        p[i] = x[i];
    }
    out
}

/// Largest over axes of the smallest distance from `x` along that axis at
/// which the energy has risen by one; `inf` when some axis stays flat.
pub(crate) fn energy_scale(integrand: &Integrand<'_>, x: &[f64], e_min: f64) -> f64 {
    let mut scratch = vec![0.0; integrand.functions.len()];
    let mut p = x.to_vec();
    let mut widest: f64 = 0.0;
    for i in 0..x.len() {
        let mut axis = f64::INFINITY;
        for dir in [1.0, -1.0] {
            let mut t = 1e-9 * (1.0 + x[i].abs());
            while t < 1e9 {
                p[i] = x[i] + dir * t;
                match integrand.energy(&p, &mut scratch) {
                    Some(e) if e - e_min >= 1.0 => {
                        axis = axis.min(t);
                        break;
                    }
                    Some(_) => t *= 2.0,
                    None => break,
                }
            }
        }
        p[i] = x[i];
        widest = widest.max(axis);
    }
    widest
}
