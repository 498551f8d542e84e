use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lowdisc::{scale_into, Halton};
use crate::measurements::problem::SEARCH_RADIUS;
use crate::measurements::{check_stable, MeasurementFunction, MomentProblem, StabilityVerdict, SupportSet};
use crate::quadrature::{integrate, IntegrationBudget, IntegrationRequest};

/// Cap on quasi-random points used to look for members of `C`.
pub const WITNESS_SAMPLES: usize = 100_000;
/// Points used to estimate the volume of the witness box.
pub const VOLUME_SAMPLES: usize = 100_000;
const KEPT_WITNESSES: usize = 16;

/// Which sufficient condition guarantees that a maximum-entropy density
/// exists.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Route {
    /// `|S| < inf` and `C` has positive volume.
    FiniteVolume,
    /// Some constraint is stable on `S` and `C` has positive volume.
    Stabilizing,
    None,
}

/// Evidence that `C = {x in S : phi_g(x) <= u_g for all g}` has positive
/// volume.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeEvidence {
    pub nonzero: bool,
    pub sampled: usize,
    pub hits: usize,
    /// A few members of `C`.
    pub witnesses: Vec<Vec<f64>>,
}

/// Uniform density on a box intersected with `C` whose moments are all
/// strictly below their bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlaterWitness {
    pub description: String,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub moments: Vec<f64>,
}

/// Entropy bounds for the maximum-entropy density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyBracket {
    /// `ln |C'|` for a sub-box `C'` of the witnesses; absent when the
    /// witnesses span no volume.
    pub lower: Option<f64>,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExistenceDiagnosis {
    pub route: Route,
    pub c_nonzero_volume: VolumeEvidence,
    /// First constraint found stable on `S`.
    pub stabilizer_index: Option<usize>,
    pub slater_witness: Option<SlaterWitness>,
    pub entropy_bracket: Option<EntropyBracket>,
    /// Why no route applies, or other notes.
    pub reasons: Vec<String>,
}

fn in_c(problem: &MomentProblem, x: &[f64]) -> bool {
    problem.support().contains(x) && problem.constraints().iter().all(|c| c.function.value(x) <= c.bound)
}

fn box_log_volume(lo: &[f64], hi: &[f64]) -> f64 {
    lo.iter().zip(hi).map(|(a, b)| (b - a).ln()).sum()
}

/// Checks the sufficient conditions for existence of the maximum-entropy
/// density and brackets its entropy.
///
/// Sampling is quasi-random and keyed only by `seed`, so enlarging any
/// bound never loses a witness.
pub fn diagnose_existence(problem: &MomentProblem, budget: &IntegrationBudget, seed: u64) -> ExistenceDiagnosis {
    let d = problem.dimension();
    let support = problem.support();
    let mut reasons = Vec::new();

    // Members of C.
    let samples = budget.max_evaluations.clamp(1, WITNESS_SAMPLES);
    let (slo, shi) = support.search_box(SEARCH_RADIUS);
    let mut halton = Halton::new(d, seed.wrapping_mul(WITNESS_SAMPLES as u64));
    let (mut u, mut x) = (vec![0.0; d], vec![0.0; d]);
    let mut hits = 0usize;
    let mut witnesses = Vec::new();
    let (mut wlo, mut whi) = (vec![f64::INFINITY; d], vec![f64::NEG_INFINITY; d]);
    for _ in 0..samples {
        halton.next_into(&mut u);
        scale_into(&u, &slo, &shi, &mut x);
        if in_c(problem, &x) {
            hits += 1;
            if witnesses.len() < KEPT_WITNESSES {
                witnesses.push(x.clone());
            }
            for i in 0..d {
                wlo[i] = wlo[i].min(x[i]);
                whi[i] = whi[i].max(x[i]);
            }
        }
    }
    let evidence = VolumeEvidence { nonzero: hits > 0, sampled: samples, hits, witnesses };
    if !evidence.nonzero {
        reasons.push(format!("no point of S satisfying every constraint found among {samples} samples"));
    }

    // A stable constraint.
    let mut stabilizer_index = None;
    for (g, c) in problem.constraints().iter().enumerate() {
        let verdict = check_stable(&c.function, support, &[1.0], budget)
            .map(|r| r.entries[0].verdict)
            .unwrap_or(StabilityVerdict::Undetermined);
        if verdict == StabilityVerdict::Stable {
            stabilizer_index = Some(g);
            break;
        }
    }

    let route = if support.finite_volume() && evidence.nonzero {
        Route::FiniteVolume
    } else if stabilizer_index.is_some() && evidence.nonzero {
        Route::Stabilizing
    } else {
        if !support.finite_volume() && stabilizer_index.is_none() {
            reasons.push(
                "the support has infinite volume and no constraint is stable on it; \
                 add a stabilizing constraint (one whose exp(-lambda phi) is integrable over S)"
                    .into(),
            );
        }
        Route::None
    };

    // Uniform density on the witness box intersected with C.
    let mut lower = None;
    let mut slater_witness = None;
    if evidence.nonzero && wlo.iter().zip(&whi).all(|(a, b)| b > a) {
        let mut h = Halton::new(d, 1 + seed.wrapping_mul(VOLUME_SAMPLES as u64));
        let mut inside = 0usize;
        let mut sums = vec![0.0; problem.len()];
        for _ in 0..VOLUME_SAMPLES {
            h.next_into(&mut u);
            scale_into(&u, &wlo, &whi, &mut x);
            if in_c(problem, &x) {
                inside += 1;
                for (s, c) in sums.iter_mut().zip(problem.constraints()) {
                    *s += c.function.value(&x);
                }
            }
        }
        if inside > 0 {
            let ratio = inside as f64 / VOLUME_SAMPLES as f64;
            lower = Some(box_log_volume(&wlo, &whi) + ratio.ln());
            let moments: Vec<f64> = sums.iter().map(|s| s / inside as f64).collect();
            let strict = moments
                .iter()
                .zip(problem.constraints())
                .all(|(m, c)| *m < c.bound - 1e-12 * (1.0 + c.bound.abs()));
            if strict {
                slater_witness = Some(SlaterWitness {
                    description: "uniform density on the witness box intersected with C".into(),
                    lower: wlo.clone(),
                    upper: whi.clone(),
                    moments,
                });
            }
        }
    }
    if slater_witness.is_none() && evidence.nonzero {
        reasons.push("no strictly feasible density found; the Slater condition is not verified".into());
    }

    let upper = match route {
        Route::FiniteVolume => Some(support.volume().ln()),
        Route::Stabilizing => stabilizer_index.and_then(|g| stabilizing_upper(problem, g, budget)),
        Route::None => None,
    };
    let entropy_bracket = upper.map(|upper| EntropyBracket { lower, upper });

    ExistenceDiagnosis { route, c_nonzero_volume: evidence, stabilizer_index, slater_witness, entropy_bracket, reasons }
}

/// `min over lambda in {2^-4, ..., 2^4} of lambda u + ln int_S exp(-lambda phi)`.
fn stabilizing_upper(problem: &MomentProblem, g: usize, budget: &IntegrationBudget) -> Option<f64> {
    let c = &problem.constraints()[g];
    (-4..=4)
        .filter_map(|k| {
            let lambda = 2f64.powi(k);
            let req = IntegrationRequest::new(problem.support().clone(), vec![(lambda, c.function.clone())]).budget(*budget);
            integrate(&req).ok().map(|r| lambda * c.bound + r.log_value)
        })
        .reduce(f64::min)
}

/// Admits the constraints and diagnoses the resulting problem. A constraint
/// that is unbounded below on the support yields route `None` instead of an
/// admission error.
pub fn diagnose_constraints(
    support: SupportSet,
    constraints: Vec<(MeasurementFunction, f64)>,
    budget: &IntegrationBudget,
    seed: u64,
) -> Result<(Option<MomentProblem>, ExistenceDiagnosis)> {
    match MomentProblem::new(support.clone(), constraints.clone()) {
        Ok(p) => {
            let diag = diagnose_existence(&p, budget, seed);
            Ok((Some(p), diag))
        }
        Err(Error::UnboundedBelow { index }) => {
            let stable = constraints.iter().position(|(f, _)| {
                check_stable(f, &support, &[1.0], budget).map(|r| r.is_stable()).unwrap_or(false)
            });
            let mut reasons = vec![format!(
                "constraint {index} (`{}`) is unbounded below on the support, so the feasible set is not closed",
                constraints[index].0.name()
            )];
            if stable.is_none() && !support.finite_volume() {
                reasons.push(
                    "the support has infinite volume and no constraint is stable on it; \
                     add a stabilizing constraint (one whose exp(-lambda phi) is integrable over S)"
                        .into(),
                );
            }
            let diag = ExistenceDiagnosis {
                route: Route::None,
                c_nonzero_volume: VolumeEvidence { nonzero: false, sampled: 0, hits: 0, witnesses: Vec::new() },
                stabilizer_index: stable,
                slater_witness: None,
                entropy_bracket: None,
                reasons,
            };
            Ok((None, diag))
        }
        Err(e) => Err(e),
    }
}
