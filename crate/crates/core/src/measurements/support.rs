use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lowdisc::{scale_into, Halton};

/// The closed half-space `normal . x <= offset`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfSpace {
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl HalfSpace {
    pub fn contains(&self, x: &[f64]) -> bool {
        self.normal.iter().zip(x).map(|(a, v)| a * v).sum::<f64>() <= self.offset
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SupportShape {
    FullSpace,
    Box,
    HalfSpaces,
    BoxWithHalfSpaces,
}

/// Points used for quasi-random volume estimates of polyhedral supports.
const VOLUME_SAMPLES: u64 = 1 << 16;

/// The support set `S`: an axis-aligned box (bounds may be infinite),
/// optionally cut by oblique half-spaces.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportSet {
    shape: SupportShape,
    lower: Vec<f64>,
    upper: Vec<f64>,
    halfspaces: Vec<HalfSpace>,
    /// Box bounds tightened by interval propagation through the half-spaces.
    tight_lower: Vec<f64>,
    tight_upper: Vec<f64>,
    volume: f64,
}

impl SupportSet {
    /// `S = R^d`.
    pub fn full(dimension: usize) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::InvalidSupport("dimension must be at least 1".into()));
        }
        Self::build(
            SupportShape::FullSpace,
            vec![f64::NEG_INFINITY; dimension],
            vec![f64::INFINITY; dimension],
            Vec::new(),
        )
    }

    /// `S = [lower, upper]` componentwise; infinite bounds allowed.
    pub fn boxed(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        Self::build(SupportShape::Box, lower, upper, Vec::new())
    }

    /// Intersection of half-spaces in `R^d`.
    pub fn halfspaces(dimension: usize, halfspaces: Vec<HalfSpace>) -> Result<Self> {
        Self::build(
            SupportShape::HalfSpaces,
            vec![f64::NEG_INFINITY; dimension],
            vec![f64::INFINITY; dimension],
            halfspaces,
        )
    }

    /// `[lower, upper]` intersected with half-spaces.
    pub fn box_with_halfspaces(lower: Vec<f64>, upper: Vec<f64>, halfspaces: Vec<HalfSpace>) -> Result<Self> {
        Self::build(SupportShape::BoxWithHalfSpaces, lower, upper, halfspaces)
    }

    fn build(shape: SupportShape, mut lower: Vec<f64>, mut upper: Vec<f64>, halfspaces: Vec<HalfSpace>) -> Result<Self> {
        let d = lower.len();
        if d == 0 || upper.len() != d {
            return Err(Error::InvalidSupport("box bounds must be nonempty and of equal length".into()));
        }
        for i in 0..d {
            if lower[i].is_nan() || upper[i].is_nan() || !(lower[i] < upper[i]) {
                return Err(Error::InvalidSupport(format!(
                    "axis {i}: need lower < upper, got [{}, {}]",
                    lower[i], upper[i]
                )));
            }
        }
        let mut oblique = Vec::new();
        for h in halfspaces {
            if h.normal.len() != d {
                return Err(Error::DimensionMismatch { expected: d, found: h.normal.len() });
            }
            if h.normal.iter().any(|v| !v.is_finite()) || !h.offset.is_finite() {
                return Err(Error::InvalidSupport("half-space coefficients must be finite".into()));
            }
            let nonzero: Vec<usize> = (0..d).filter(|&i| h.normal[i] != 0.0).collect();
            match nonzero.as_slice() {
                [] if h.offset >= 0.0 => {}
                [] => return Err(Error::InvalidSupport("half-space 0 <= negative offset is empty".into())),
                [i] => {
                    let bound = h.offset / h.normal[*i];
                    if h.normal[*i] > 0.0 {
                        upper[*i] = upper[*i].min(bound);
                    } else {
                        lower[*i] = lower[*i].max(bound);
                    }
                }
                _ => oblique.push(h),
            }
        }
        for i in 0..d {
            if !(lower[i] < upper[i]) {
                return Err(Error::InvalidSupport(format!("axis {i} is empty after half-space cuts")));
            }
        }
        let (tight_lower, tight_upper) = tighten(&lower, &upper, &oblique);
        let mut support = Self {
            shape,
            lower,
            upper,
            halfspaces: oblique,
            tight_lower,
            tight_upper,
            volume: f64::INFINITY,
        };
        support.volume = support.compute_volume()?;
        Ok(support)
    }

    fn compute_volume(&self) -> Result<f64> {
        let d = self.dimension();
        let box_volume: f64 = (0..d).map(|i| self.tight_upper[i] - self.tight_lower[i]).product();
        if self.halfspaces.is_empty() {
            return Ok(box_volume);
        }
        // Hit-ratio estimate; for unbounded sets only nonemptiness is checked.
        let (lo, hi) = self.search_box(1e3);
        let mut h = Halton::new(d, 0);
        let (mut u, mut x) = (vec![0.0; d], vec![0.0; d]);
        let mut hits = 0u64;
        for _ in 0..VOLUME_SAMPLES {
            h.next_into(&mut u);
            scale_into(&u, &lo, &hi, &mut x);
            if self.contains(&x) {
                hits += 1;
            }
        }
        if hits == 0 {
            return Err(Error::InvalidSupport("support has (numerically) zero volume".into()));
        }
        if box_volume.is_finite() {
            Ok(box_volume * hits as f64 / VOLUME_SAMPLES as f64)
        } else {
            Ok(f64::INFINITY)
        }
    }

    pub fn dimension(&self) -> usize {
        self.lower.len()
    }

    pub fn shape(&self) -> SupportShape {
        self.shape
    }

    /// Lebesgue volume `|S|` (`+inf` allowed).
    pub fn volume(&self) -> f64 {
        self.volume
    }

    pub fn finite_volume(&self) -> bool {
        self.volume.is_finite()
    }

    pub fn halfspace_cuts(&self) -> &[HalfSpace] {
        &self.halfspaces
    }

    /// Smallest known axis-aligned box containing `S`.
    pub fn bounding_box(&self) -> (&[f64], &[f64]) {
        (&self.tight_lower, &self.tight_upper)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .enumerate()
            .all(|(i, v)| self.lower[i] <= *v && *v <= self.upper[i])
            && self.halfspaces.iter().all(|h| h.contains(x))
    }

    /// A finite box for sampling: finite bounds are kept, infinite ones are
    /// replaced so that each side spans `2 * radius`.
    pub fn search_box(&self, radius: f64) -> (Vec<f64>, Vec<f64>) {
        let d = self.dimension();
        let (mut lo, mut hi) = (vec![0.0; d], vec![0.0; d]);
        for i in 0..d {
            let (a, b) = (self.tight_lower[i], self.tight_upper[i]);
            (lo[i], hi[i]) = match (a.is_finite(), b.is_finite()) {
                (true, true) => (a, b),
                (true, false) => (a, a + 2.0 * radius),
                (false, true) => (b - 2.0 * radius, b),
                (false, false) => (-radius, radius),
            };
        }
        (lo, hi)
    }

    /// Clips `x` into the bounding box.
    pub(crate) fn clamp_into_box(&self, x: &mut [f64]) {
        for i in 0..x.len() {
            x[i] = x[i].clamp(self.tight_lower[i], self.tight_upper[i]);
        }
    }
}

/// Interval propagation of `normal . x <= offset` into the box bounds.
fn tighten(lower: &[f64], upper: &[f64], halfspaces: &[HalfSpace]) -> (Vec<f64>, Vec<f64>) {
    let (mut lo, mut hi) = (lower.to_vec(), upper.to_vec());
    let d = lo.len();
    for _ in 0..8 {
        let mut changed = false;
        for h in halfspaces {
            for i in 0..d {
                let a = h.normal[i];
                if a == 0.0 {
                    continue;
                }
                // min over the box of sum_{j != i} a_j x_j
                let rest: f64 = (0..d)
                    .filter(|&j| j != i && h.normal[j] != 0.0)
                    .map(|j| {
                        let aj = h.normal[j];
                        if aj > 0.0 {
                            aj * lo[j]
                        } else {
                            aj * hi[j]
                        }
                    })
                    .sum();
                if !rest.is_finite() {
                    continue;
                }
                let bound = (h.offset - rest) / a;
                if a > 0.0 && bound < hi[i] {
                    hi[i] = bound;
                    changed = true;
                } else if a < 0.0 && bound > lo[i] {
                    lo[i] = bound;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    (lo, hi)
}
