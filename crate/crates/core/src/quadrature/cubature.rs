//! Globally adaptive tensor-product Gauss-Kronrod (7/15) cubature over a box.
//!
//! All components of the integrand share nodes, so ratios of components
//! (moments) are computed from correlated estimates.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::Integrand;

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// Exponent gap below the running shift that forces a restart.
const SHIFT_SLACK: f64 = 600.0;

struct Rule {
    nodes: [f64; 15],
    kronrod: [f64; 15],
    gauss: [f64; 15],
}

fn rule() -> Rule {
    let mut nodes = [0.0; 15];
    let mut kronrod = [0.0; 15];
    let mut gauss = [0.0; 15];
    for j in 0..8 {
        let g = if j % 2 == 1 { WG[j / 2] } else { 0.0 };
        nodes[j] = -XGK[j];
        nodes[14 - j] = XGK[j];
        kronrod[j] = WGK[j];
        kronrod[14 - j] = WGK[j];
        gauss[j] = g;
        gauss[14 - j] = g;
    }
    Rule { nodes, kronrod, gauss }
}

struct Cell {
    lo: Vec<f64>,
    hi: Vec<f64>,
    values: Vec<f64>,
    errors: Vec<f64>,
    abs: Vec<f64>,
    split_axis: usize,
    priority: f64,
}

impl PartialEq for Cell {
    fn eq(&self, other: &Self) -> bool {
        self.priority.total_cmp(&other.priority) == Ordering::Equal
    }
}
impl Eq for Cell {}
impl PartialOrd for Cell {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Cell {
    fn cmp(&self, other: &Self) -> Ordering {
        self.priority.total_cmp(&other.priority)
    }
}

pub(crate) struct CubatureOutcome {
    /// Integrals of `w_k(x) exp(shift - E(x))`, `w_0 = 1`.
    pub values: Vec<f64>,
    pub errors: Vec<f64>,
    pub abs: Vec<f64>,
    pub evaluations: usize,
    pub converged: bool,
}

/// Outcome of a cubature attempt.
pub(crate) enum Attempt {
    Done(CubatureOutcome),
    /// A node had energy far below the shift; retry with this shift.
    Reshift(f64),
}

struct Evaluator<'a, 'b> {
    integrand: &'a Integrand<'b>,
    rule: Rule,
    shift: f64,
    comps: usize,
    scratch: Vec<f64>,
    point: Vec<f64>,
    node_vals: Vec<f64>,
    min_energy: f64,
}

impl Evaluator<'_, '_> {
    fn evaluate(&mut self, lo: &[f64], hi: &[f64], scales: &[f64]) -> Option<Cell> {
        let d = lo.len();
        let n_nodes = 15usize.pow(d as u32);
        let comps = self.comps;
        let half: Vec<f64> = (0..d).map(|a| 0.5 * (hi[a] - lo[a])).collect();
        let mid: Vec<f64> = (0..d).map(|a| 0.5 * (hi[a] + lo[a])).collect();
        let jac: f64 = half.iter().product();
        let mut values = vec![0.0; comps];
        let mut abs = vec![0.0; comps];
        let mut gauss = vec![0.0; comps * d];
        let mut idx = vec![0usize; d];
        self.node_vals.resize(comps, 0.0);
        for _ in 0..n_nodes {
            for a in 0..d {
                self.point[a] = mid[a] + half[a] * self.rule.nodes[idx[a]];
            }
            let inside = self.integrand.eval(&self.point, &mut self.scratch, &mut self.node_vals[..]);
            if let Some(energy) = inside {
                self.min_energy = self.min_energy.min(energy);
                if energy < self.shift - SHIFT_SLACK {
                    return None;
                }
                let w = (self.shift - energy).exp();
                let kw: f64 = idx.iter().map(|&i| self.rule.kronrod[i]).product();
                for c in 0..comps {
                    let f = w * self.node_vals[c];
                    values[c] += kw * f;
                    abs[c] += kw * f.abs();
                    for a in 0..d {
                        let gw = kw / self.rule.kronrod[idx[a]] * self.rule.gauss[idx[a]];
                        gauss[c * d + a] += gw * f;
                    }
                }
            }
            for a in 0..d {
                idx[a] += 1;
                if idx[a] < 15 {
                    break;
                }
                idx[a] = 0;
            }
        }
        let mut errors = vec![0.0; comps];
        let mut axis_err = vec![0.0; d];
        for c in 0..comps {
            values[c] *= jac;
            abs[c] *= jac;
            for a in 0..d {
                let e = (values[c] - gauss[c * d + a] * jac).abs();
                errors[c] += e;
                axis_err[a] += e / scales[c];
            }
        }
        let split_axis = (0..d)
            .max_by(|&a, &b| axis_err[a].total_cmp(&axis_err[b]).then(b.cmp(&a)))
            .unwrap_or(0);
        let priority = (0..comps).map(|c| errors[c] / scales[c]).fold(0.0, f64::max);
        Some(Cell { lo: lo.to_vec(), hi: hi.to_vec(), values, errors, abs, split_axis, priority })
    }
}

/// Adaptive cubature of all integrand components over `[lo, hi]`, with
/// integrand values scaled by `exp(shift)`.
pub(crate) fn adaptive(integrand: &Integrand<'_>, lo: &[f64], hi: &[f64], shift: f64, rel_tol: f64, budget: usize) -> Attempt {
    let d = lo.len();
    let comps = integrand.components();
    let per_cell = 15usize.pow(d as u32);
    let mut ev = Evaluator {
        integrand,
        rule: rule(),
        shift,
        comps,
        scratch: vec![0.0; integrand.functions.len()],
        point: vec![0.0; d],
        node_vals: vec![0.0; comps],
        min_energy: f64::INFINITY,
    };
    let unit = vec![1.0; comps];
    let Some(root) = ev.evaluate(lo, hi, &unit) else {
        return Attempt::Reshift(ev.min_energy);
    };
    let mut evaluations = per_cell;
    let scales: Vec<f64> = root.abs.iter().map(|a| a.max(1e-300)).collect();
    let mut heap = BinaryHeap::new();
    let mut finished: Vec<Cell> = Vec::new();
    let mut root = root;
    root.priority = (0..comps).map(|c| root.errors[c] / scales[c]).fold(0.0, f64::max);
    heap.push(root);
    let mut tot_err = heap.peek().map(|c: &Cell| c.errors.clone()).unwrap_or_default();
    let mut tot_abs = heap.peek().map(|c: &Cell| c.abs.clone()).unwrap_or_default();
    let mut converged = false;
    loop {
        if (0..comps).all(|c| tot_err[c] <= rel_tol * tot_abs[c] || tot_abs[c] == 0.0) {
            converged = true;
            break;
        }
        if evaluations + 2 * per_cell > budget {
            break;
        }
        let Some(cell) = heap.pop() else {
            break;
        };
        let a = cell.split_axis;
        let width = cell.hi[a] - cell.lo[a];
        let centre = 0.5 * (cell.hi[a] + cell.lo[a]);
        if width <= 1e-13 * (1.0 + centre.abs()) {
            finished.push(cell);
            continue;
        }
        let mut left_hi = cell.hi.clone();
        left_hi[a] = centre;
        let mut right_lo = cell.lo.clone();
        right_lo[a] = centre;
        let halves = [ev.evaluate(&cell.lo, &left_hi, &scales), ev.evaluate(&right_lo, &cell.hi, &scales)];
        evaluations += 2 * per_cell;
        for c in 0..comps {
            tot_err[c] -= cell.errors[c];
            tot_abs[c] -= cell.abs[c];
        }
        for h in halves {
            match h {
                Some(child) => {
                    for c in 0..comps {
                        tot_err[c] += child.errors[c];
                        tot_abs[c] += child.abs[c];
                    }
                    heap.push(child)
                }
                None => return Attempt::Reshift(ev.min_energy),
            }
        }
        // Running sums drift; refresh them from the cells now and then.
        if heap.len() % 512 == 0 {
            tot_err.iter_mut().for_each(|v| *v = 0.0);
            tot_abs.iter_mut().for_each(|v| *v = 0.0);
            for cell in heap.iter().chain(finished.iter()) {
                for c in 0..comps {
                    tot_err[c] += cell.errors[c];
                    tot_abs[c] += cell.abs[c];
                }
            }
        }
    }
    let mut values = vec![0.0; comps];
    let mut errors = vec![0.0; comps];
    let mut abs = vec![0.0; comps];
    // Sum smallest contributions first.
    let mut cells: Vec<Cell> = heap.into_vec();
    cells.extend(finished);
    cells.sort_by(|x, y| x.abs[0].total_cmp(&y.abs[0]));
    for cell in &cells {
        for c in 0..comps {
            values[c] += cell.values[c];
            errors[c] += cell.errors[c];
            abs[c] += cell.abs[c];
        }
    }
    Attempt::Done(CubatureOutcome { values, errors, abs, evaluations, converged })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measurements::{MeasurementFunction, SupportSet};

    fn run(integrand: &Integrand<'_>, lo: &[f64], hi: &[f64]) -> CubatureOutcome {
        match adaptive(integrand, lo, hi, 0.0, 1e-12, 1_000_000) {
            Attempt::Done(o) => o,
            Attempt::Reshift(_) => panic!("unexpected reshift"),
        }
    }

    #[test]
    fn kronrod_weights_sum_to_two() {
        let r = rule();
        assert!((r.kronrod.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        assert!((r.gauss.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn gaussian_on_interval() {
        let s = SupportSet::full(1).unwrap();
        let sq = MeasurementFunction::power(1, 0, 2).unwrap();
        let integrand = Integrand::new(&s, vec![(&sq, 1.0)], vec![0]);
        let out = run(&integrand, &[-10.0], &[10.0]);
        assert!(out.converged);
        assert!((out.values[0] - std::f64::consts::PI.sqrt()).abs() < 1e-12);
        // E[x^2] = 1/2 under exp(-x^2)
        assert!((out.values[1] / out.values[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn kink_is_resolved() {
        let s = SupportSet::full(1).unwrap();
        let abs = MeasurementFunction::abs_power(1, 0, 1.0).unwrap();
        let integrand = Integrand::new(&s, vec![(&abs, 1.0)], vec![]);
        let out = run(&integrand, &[-3.0], &[5.0]);
        let exact = 2.0 - (-3.0f64).exp() - (-5.0f64).exp();
        assert!((out.values[0] - exact).abs() < 1e-12, "{}", out.values[0] - exact);
    }

    #[test]
    fn two_dimensional_gaussian() {
        let s = SupportSet::full(2).unwrap();
        let n2 = MeasurementFunction::norm_power(2, 2.0).unwrap();
        let integrand = Integrand::new(&s, vec![(&n2, 1.0)], vec![]);
        let out = run(&integrand, &[-8.0, -8.0], &[8.0, 8.0]);
        assert!((out.values[0] - std::f64::consts::PI).abs() < 1e-10);
    }

    #[test]
    fn reshift_requested_for_huge_integrand() {
        let s = SupportSet::full(1).unwrap();
        let lin = MeasurementFunction::power(1, 0, 1).unwrap();
        let integrand = Integrand::new(&s, vec![(&lin, 1.0)], vec![]);
        assert!(matches!(adaptive(&integrand, &[-2000.0], &[0.0], 0.0, 1e-8, 10_000), Attempt::Reshift(e) if e < -600.0));
    }
}
