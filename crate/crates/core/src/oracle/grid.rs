//! Brute-force maximum entropy on a lattice of cell midpoints.
//!
//! The discrete problem maximises `-sum p_i ln(p_i / delta)` over the
//! simplex subject to `sum p_i phi_g(x_i) <= u_g`. Its dual is minimised one
//! coordinate at a time by safeguarded Newton steps on exact finite sums.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measurements::MomentProblem;

const MAX_SWEEPS: usize = 10_000;
const INNER_NEWTON: usize = 8;
const LAMBDA_CEILING: f64 = 1e12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridMaxent {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub cells_per_axis: usize,
    pub cell_volume: f64,
    /// Cell midpoints, row-major with the first axis fastest.
    pub points: Vec<Vec<f64>>,
    /// Zero on cells whose midpoint lies outside the support.
    pub probabilities: Vec<f64>,
    /// `-sum p_i ln(p_i / delta)`.
    pub entropy_grid: f64,
    pub lambda: Vec<f64>,
    pub moments: Vec<f64>,
    pub sweeps: usize,
    pub kkt_residual: f64,
}

impl GridMaxent {
    /// `0.5 sum_i |p_i - f(x_i) delta|`.
    pub fn tv_distance(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        0.5 * self
            .points
            .iter()
            .zip(&self.probabilities)
            .map(|(x, p)| (p - f(x) * self.cell_volume).abs())
            .sum::<f64>()
    }

    /// Piecewise-constant density value on each cell.
    pub fn step_density(&self) -> Vec<f64> {
        self.probabilities.iter().map(|p| p / self.cell_volume).collect()
    }
}

fn log_sum_exp(v: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = v.clone().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.map(|x| (x - m).exp()).sum::<f64>().ln()
}

struct Discrete {
    /// `values[g][i] = phi_g(x_i)` over the cells inside the support.
    values: Vec<Vec<f64>>,
    cells: usize,
    bounds: Vec<f64>,
    log_delta: f64,
}

impl Discrete {
    fn log_weights(&self, lambda: &[f64]) -> Vec<f64> {
        (0..self.cells)
            .map(|i| self.log_delta - lambda.iter().zip(&self.values).map(|(l, v)| l * v[i]).sum::<f64>())
            .collect()
    }

    fn dual(&self, lambda: &[f64]) -> f64 {
        let lw = self.log_weights(lambda);
        log_sum_exp(lw.iter().copied()) + lambda.iter().zip(&self.bounds).map(|(l, u)| l * u).sum::<f64>()
    }

    fn probabilities(&self, lambda: &[f64]) -> Vec<f64> {
        let lw = self.log_weights(lambda);
        let lse = log_sum_exp(lw.iter().copied());
        lw.iter().map(|w| (w - lse).exp()).collect()
    }

    /// Mean and variance of `phi_g` under the current distribution.
    fn stats(&self, p: &[f64], g: usize) -> (f64, f64) {
        let v = &self.values[g];
        let mean: f64 = p.iter().zip(v).map(|(p, x)| p * x).sum();
        let var: f64 = p.iter().zip(v).map(|(p, x)| p * (x - mean) * (x - mean)).sum();
        (mean, var)
    }
}

/// Solves the lattice maximum-entropy problem on `truncation` split into
/// roughly `cells` cells (`d <= 2`), to KKT residual `tol`.
pub fn grid_solve(problem: &MomentProblem, truncation: (&[f64], &[f64]), cells: usize, tol: f64) -> Result<GridMaxent> {
    let d = problem.dimension();
    let (lo, hi) = truncation;
    if d > 2 {
        return Err(Error::InvalidProblem("the grid oracle handles dimensions 1 and 2 only".into()));
    }
    if lo.len() != d || hi.len() != d {
        return Err(Error::DimensionMismatch { expected: d, found: lo.len().min(hi.len()) });
    }
    if lo.iter().zip(hi).any(|(a, b)| !(a.is_finite() && b.is_finite() && a < b)) {
        return Err(Error::InvalidProblem("truncation box must be finite and nonempty".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidProblem("grid tolerance must be positive".into()));
    }
    let per_axis = if d == 1 { cells } else { (cells as f64).sqrt().round() as usize };
    if per_axis < 2 {
        return Err(Error::InvalidProblem("at least two cells per axis are required".into()));
    }
    let widths: Vec<f64> = (0..d).map(|i| (hi[i] - lo[i]) / per_axis as f64).collect();
    let cell_volume: f64 = widths.iter().product();
    let total = per_axis.pow(d as u32);

    let mut points = Vec::with_capacity(total);
    let mut inside = Vec::with_capacity(total);
    for k in 0..total {
        let mut rem = k;
        let x: Vec<f64> = (0..d)
            .map(|i| {
                let j = rem % per_axis;
                rem /= per_axis;
                lo[i] + (j as f64 + 0.5) * widths[i]
            })
            .collect();
        if problem.support().contains(&x) {
            inside.push(points.len());
        }
        points.push(x);
    }
    if inside.is_empty() {
        return Err(Error::InfeasibleDiscretization("no cell midpoint lies in the support".into()));
    }

    let disc = Discrete {
        values: problem
            .constraints()
            .iter()
            .map(|c| inside.iter().map(|&i| c.function.value(&points[i])).collect())
            .collect(),
        cells: inside.len(),
        bounds: problem.bounds(),
        log_delta: cell_volume.ln(),
    };
    for (g, v) in disc.values.iter().enumerate() {
        let min = v.iter().copied().fold(f64::INFINITY, f64::min);
        if min > disc.bounds[g] {
            return Err(Error::InfeasibleDiscretization(format!(
                "constraint {g}: smallest grid value {min} exceeds the bound {}",
                disc.bounds[g]
            )));
        }
    }

    let n = problem.len();
    let mut lambda = vec![0.0; n];
    let mut sweeps = 0;
    let mut kkt = f64::INFINITY;
    while sweeps < MAX_SWEEPS {
        sweeps += 1;
        for g in 0..n {
            for _ in 0..INNER_NEWTON {
                let p = disc.probabilities(&lambda);
                let (mean, var) = disc.stats(&p, g);
                let grad = disc.bounds[g] - mean;
                if grad.abs() <= 0.01 * tol && lambda[g] > 0.0 {
                    break;
                }
                let target = if var > 1e-300 {
                    (lambda[g] - grad / var).max(0.0)
                } else if grad >= 0.0 {
                    0.0
                } else {
                    return Err(Error::InfeasibleDiscretization(format!("constraint {g} cannot be met on the grid")));
                };
                let f0 = disc.dual(&lambda);
                let start = lambda[g];
                let mut step = target - start;
                let mut accepted = false;
                for _ in 0..60 {
                    lambda[g] = start + step;
                    if disc.dual(&lambda) <= f0 + 1e-15 * f0.abs() {
                        accepted = true;
                        break;
                    }
                    step *= 0.5;
                }
                if !accepted {
                    lambda[g] = start;
                    break;
                }
                if lambda[g] > LAMBDA_CEILING {
                    return Err(Error::InfeasibleDiscretization(format!("multiplier {g} diverges")));
                }
                if step.abs() <= 1e-15 * (1.0 + lambda[g]) {
                    break;
                }
            }
        }
        let p = disc.probabilities(&lambda);
        kkt = (0..n)
            .map(|g| {
                let grad = disc.bounds[g] - disc.stats(&p, g).0;
                (lambda[g] - (lambda[g] - grad).max(0.0)).abs()
            })
            .fold(0.0, f64::max);
        if kkt < tol {
            break;
        }
    }
    if !(kkt < tol) {
        return Err(Error::InfeasibleDiscretization(format!(
            "coordinate Newton stalled with KKT residual {kkt:e} after {sweeps} sweeps"
        )));
    }

    let p_inside = disc.probabilities(&lambda);
    let mut probabilities = vec![0.0; total];
    for (k, &i) in inside.iter().enumerate() {
        probabilities[i] = p_inside[k];
    }
    let entropy_grid = -p_inside.iter().filter(|p| **p > 0.0).map(|p| p * (p / cell_volume).ln()).sum::<f64>();
    let moments = (0..n).map(|g| disc.stats(&p_inside, g).0).collect();
    Ok(GridMaxent {
        lower: lo.to_vec(),
        upper: hi.to_vec(),
        cells_per_axis: per_axis,
        cell_volume,
        points,
        probabilities,
        entropy_grid,
        lambda,
        moments,
        sweeps,
        kkt_residual: kkt,
    })
}
