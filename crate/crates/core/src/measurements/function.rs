use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point of `R^d` with finite coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::DimensionMismatch { expected: 1, found: 0 });
        }
        if let Some(index) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::NonFiniteInput { index });
        }
        Ok(Self(coords))
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

impl From<f64> for Point {
    fn from(x: f64) -> Self {
        assert!(x.is_finite(), "non-finite coordinate");
        Self(vec![x])
    }
}

/// Structural attributes of a measurement function.
///
/// For built-in kinds these are derived from the parameters. For callbacks
/// they are whatever the caller declares; the library only spot-checks them
/// by sampling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Attributes {
    /// Global lower bound `L` over `R^d` (may be `-inf`).
    pub lower_bound: f64,
    /// Global upper bound over `R^d` (may be `+inf`).
    pub upper_bound: f64,
    pub is_convex: bool,
    /// Omni-directionally unbounded: `f(x) -> +inf` as `|x| -> inf`.
    pub is_coercive: bool,
    pub is_well_behaved: bool,
    /// Radius `M` outside which a convex coercive minorant applies.
    pub well_behaved_radius: Option<f64>,
    /// Constant `c` with `f(x) >= c |x|^2` asymptotically, when known.
    pub quadratic_growth: Option<f64>,
}

impl Attributes {
    /// Attributes claiming nothing beyond a lower bound.
    pub fn bounded_below(lower_bound: f64) -> Self {
        Self {
            lower_bound,
            upper_bound: f64::INFINITY,
            is_convex: false,
            is_coercive: false,
            is_well_behaved: false,
            well_behaved_radius: None,
            quadratic_growth: None,
        }
    }

    /// Convex and coercive, hence well-behaved with radius 0.
    pub fn convex_coercive(lower_bound: f64) -> Self {
        Self {
            is_convex: true,
            is_coercive: true,
            is_well_behaved: true,
            well_behaved_radius: Some(0.0),
            ..Self::bounded_below(lower_bound)
        }
    }

    /// True when stability follows from the declared structure alone.
    pub fn structurally_stable(&self) -> bool {
        (self.is_convex && self.is_coercive) || self.is_well_behaved
    }
}

type Callback = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum FunctionKind {
    /// `x_axis^p` (integer `p`) or `|x_axis|^p` (real `p > 0`).
    Power { axis: usize, exponent: f64, absolute: bool },
    /// `|x|^p` with the Euclidean norm.
    NormPower { exponent: f64 },
    /// `x^T Q x`, `Q` symmetric positive semidefinite, row-major.
    QuadraticForm { matrix: Vec<f64> },
    /// `1 - 1_A(x)` for the closed box `A = [lower, upper]`.
    IndicatorComplement { lower: Vec<f64>, upper: Vec<f64> },
    /// `sum_k mu_k phi_k` with `mu_k >= 0`.
    LinearCombination { terms: Vec<(f64, MeasurementFunction)> },
    /// `-phi`.
    Negated(Box<MeasurementFunction>),
    Callback { name: String, f: Callback },
}

/// A measurement (moment) function `phi: R^d -> R` together with its
/// structural attributes.
#[derive(Clone)]
pub struct MeasurementFunction {
    kind: FunctionKind,
    dimension: usize,
    attributes: Attributes,
    affine: bool,
}

impl fmt::Debug for MeasurementFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MeasurementFunction")
            .field("name", &self.name())
            .field("dimension", &self.dimension)
            .field("attributes", &self.attributes)
            .finish()
    }
}

fn check_axis(dimension: usize, axis: usize) -> Result<()> {
    if dimension == 0 {
        return Err(Error::InvalidFunction("dimension must be at least 1".into()));
    }
    if axis >= dimension {
        return Err(Error::InvalidFunction(format!("axis {axis} out of range for dimension {dimension}")));
    }
    Ok(())
}

impl MeasurementFunction {
    /// Signed power `x_axis^p`; `p` must be a positive integer.
    pub fn power(dimension: usize, axis: usize, exponent: u32) -> Result<Self> {
        check_axis(dimension, axis)?;
        if exponent == 0 {
            return Err(Error::InvalidFunction("exponent must be positive".into()));
        }
        if exponent % 2 == 0 {
            let mut f = Self::abs_power(dimension, axis, exponent as f64)?;
            f.kind = FunctionKind::Power { axis, exponent: exponent as f64, absolute: false };
            return Ok(f);
        }
        let linear = exponent == 1;
        Ok(Self {
            kind: FunctionKind::Power { axis, exponent: exponent as f64, absolute: false },
            dimension,
            attributes: Attributes {
                is_convex: linear,
                ..Attributes::bounded_below(f64::NEG_INFINITY)
            },
            affine: linear,
        })
    }

    /// `|x_axis|^p`, `p > 0`.
    pub fn abs_power(dimension: usize, axis: usize, exponent: f64) -> Result<Self> {
        check_axis(dimension, axis)?;
        if !(exponent > 0.0 && exponent.is_finite()) {
            return Err(Error::InvalidFunction(format!("exponent must be positive and finite, got {exponent}")));
        }
        let convex = exponent >= 1.0;
        let coercive = dimension == 1;
        Ok(Self {
            kind: FunctionKind::Power { axis, exponent, absolute: true },
            dimension,
            attributes: Attributes {
                lower_bound: 0.0,
                upper_bound: f64::INFINITY,
                is_convex: convex,
                is_coercive: coercive,
                is_well_behaved: convex && coercive,
                well_behaved_radius: (convex && coercive).then_some(0.0),
                quadratic_growth: (coercive && exponent >= 2.0).then_some(1.0),
            },
            affine: false,
        })
    }

    /// `|x|^p`, `p > 0`.
    pub fn norm_power(dimension: usize, exponent: f64) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::InvalidFunction("dimension must be at least 1".into()));
        }
        if !(exponent > 0.0 && exponent.is_finite()) {
            return Err(Error::InvalidFunction(format!("exponent must be positive and finite, got {exponent}")));
        }
        let convex = exponent >= 1.0;
        Ok(Self {
            kind: FunctionKind::NormPower { exponent },
            dimension,
            attributes: Attributes {
                lower_bound: 0.0,
                upper_bound: f64::INFINITY,
                is_convex: convex,
                is_coercive: true,
                is_well_behaved: convex,
                well_behaved_radius: convex.then_some(0.0),
                quadratic_growth: (exponent >= 2.0).then_some(1.0),
            },
            affine: false,
        })
    }

    /// `x^T Q x` for a symmetric positive semidefinite `Q` given row-major.
    pub fn quadratic_form(dimension: usize, matrix: Vec<f64>) -> Result<Self> {
        if dimension == 0 || matrix.len() != dimension * dimension {
            return Err(Error::InvalidFunction(format!(
                "quadratic form needs a {dimension}x{dimension} matrix, got {} entries",
                matrix.len()
            )));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidFunction("quadratic form has non-finite entries".into()));
        }
        let q = DMatrix::from_row_slice(dimension, dimension, &matrix);
        let scale = q.amax().max(1.0);
        if (&q - q.transpose()).amax() > 1e-12 * scale {
            return Err(Error::InvalidFunction("quadratic form matrix is not symmetric".into()));
        }
        let min_eig = SymmetricEigen::new(q).eigenvalues.min();
        if min_eig < -1e-12 * scale {
            return Err(Error::InvalidFunction(format!(
                "quadratic form matrix is not positive semidefinite (eigenvalue {min_eig:e})"
            )));
        }
        let coercive = min_eig > 1e-12 * scale;
        Ok(Self {
            kind: FunctionKind::QuadraticForm { matrix },
            dimension,
            attributes: Attributes {
                lower_bound: 0.0,
                upper_bound: f64::INFINITY,
                is_convex: true,
                is_coercive: coercive,
                is_well_behaved: coercive,
                well_behaved_radius: coercive.then_some(0.0),
                quadratic_growth: coercive.then_some(min_eig),
            },
            affine: false,
        })
    }

    /// `1 - 1_A(x)` where `A` is the closed box `[lower, upper]`.
    pub fn indicator_complement(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(Error::InvalidFunction("region bounds must be nonempty and of equal length".into()));
        }
        if lower.iter().zip(&upper).any(|(a, b)| !(a <= b) || a.is_nan()) {
            return Err(Error::InvalidFunction("region requires lower <= upper".into()));
        }
        Ok(Self {
            dimension: lower.len(),
            kind: FunctionKind::IndicatorComplement { lower, upper },
            attributes: Attributes { upper_bound: 1.0, ..Attributes::bounded_below(0.0) },
            affine: false,
        })
    }

    /// `sum_k mu_k phi_k` with nonnegative finite weights.
    pub fn linear_combination(terms: Vec<(f64, MeasurementFunction)>) -> Result<Self> {
        let Some(dimension) = terms.first().map(|(_, f)| f.dimension) else {
            return Err(Error::InvalidFunction("linear combination needs at least one term".into()));
        };
        for (index, (w, f)) in terms.iter().enumerate() {
            if !(w.is_finite() && *w >= 0.0) {
                return Err(Error::InvalidWeight { index, weight: *w });
            }
            if f.dimension != dimension {
                return Err(Error::DimensionMismatch { expected: dimension, found: f.dimension });
            }
        }
        let active: Vec<_> = terms.iter().filter(|(w, _)| *w > 0.0).collect();
        let scaled = |w: f64, v: f64| if v.is_infinite() { v } else { w * v };
        let lower_bound: f64 = active.iter().map(|(w, f)| scaled(*w, f.attributes.lower_bound)).sum();
        let upper_bound: f64 = active.iter().map(|(w, f)| scaled(*w, f.attributes.upper_bound)).sum();
        let lower_bound = if lower_bound.is_nan() { f64::NEG_INFINITY } else { lower_bound };
        let upper_bound = if upper_bound.is_nan() { f64::INFINITY } else { upper_bound };
        let bounded_below = lower_bound.is_finite();
        let is_convex = active.iter().all(|(_, f)| f.attributes.is_convex);
        let is_coercive = bounded_below && active.iter().any(|(_, f)| f.attributes.is_coercive);
        let wb_term = active.iter().find(|(_, f)| f.attributes.is_well_behaved);
        let (is_well_behaved, well_behaved_radius) = if is_convex && is_coercive {
            (true, Some(0.0))
        } else if let (Some((_, f)), true) = (wb_term, bounded_below) {
            (true, f.attributes.well_behaved_radius)
        } else {
            (false, None)
        };
        let quadratic_growth = if bounded_below {
            active
                .iter()
                .filter_map(|(w, f)| f.attributes.quadratic_growth.map(|c| w * c))
                .fold(None, |acc: Option<f64>, c| Some(acc.map_or(c, |a| a.max(c))))
        } else {
            None
        };
        let affine = active.iter().all(|(_, f)| f.affine);
        Ok(Self {
            kind: FunctionKind::LinearCombination { terms },
            dimension,
            attributes: Attributes {
                lower_bound,
                upper_bound,
                is_convex,
                is_coercive,
                is_well_behaved,
                well_behaved_radius,
                quadratic_growth,
            },
            affine,
        })
    }

    /// `-phi`.
    pub fn negated(inner: MeasurementFunction) -> Self {
        let attributes = Attributes {
            is_convex: inner.affine,
            ..Attributes::bounded_below(-inner.attributes.upper_bound)
        };
        let attributes = Attributes { upper_bound: -inner.attributes.lower_bound, ..attributes };
        Self {
            dimension: inner.dimension,
            affine: inner.affine,
            kind: FunctionKind::Negated(Box::new(inner)),
            attributes,
        }
    }

    /// An opaque user function with caller-declared attributes.
    pub fn callback<F>(dimension: usize, name: impl Into<String>, attributes: Attributes, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        if dimension == 0 {
            return Err(Error::InvalidFunction("dimension must be at least 1".into()));
        }
        if attributes.is_well_behaved && attributes.well_behaved_radius.is_none_or(|m| !(m >= 0.0)) {
            return Err(Error::InvalidFunction("well-behaved declaration needs a radius M >= 0".into()));
        }
        Ok(Self {
            kind: FunctionKind::Callback { name: name.into(), f: Arc::new(f) },
            dimension,
            attributes,
            affine: false,
        })
    }

    /// Replaces the structural attributes with a caller declaration.
    pub fn declare(mut self, attributes: Attributes) -> Self {
        self.attributes = attributes;
        self
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn attributes(&self) -> &Attributes {
        &self.attributes
    }

    pub fn kind(&self) -> &FunctionKind {
        &self.kind
    }

    pub fn lower_bound(&self) -> f64 {
        self.attributes.lower_bound
    }

    pub fn name(&self) -> String {
        match &self.kind {
            FunctionKind::Power { axis, exponent, absolute: true } => format!("|x{}|^{exponent}", axis + 1),
            FunctionKind::Power { axis, exponent, absolute: false } => format!("x{}^{exponent}", axis + 1),
            FunctionKind::NormPower { exponent } => format!("|x|^{exponent}"),
            FunctionKind::QuadraticForm { .. } => "x'Qx".to_string(),
            FunctionKind::IndicatorComplement { .. } => "1-1_A".to_string(),
            FunctionKind::LinearCombination { terms } => terms
                .iter()
                .map(|(w, f)| format!("{w}*({})", f.name()))
                .collect::<Vec<_>>()
                .join(" + "),
            FunctionKind::Negated(inner) => format!("-({})", inner.name()),
            FunctionKind::Callback { name, .. } => name.clone(),
        }
    }

    /// Unchecked evaluation on raw coordinates of the right length.
    pub(crate) fn value(&self, x: &[f64]) -> f64 {
        match &self.kind {
            FunctionKind::Power { axis, exponent, absolute } => {
                let v = x[*axis];
                if *absolute {
                    v.abs().powf(*exponent)
                } else {
                    v.powi(*exponent as i32)
                }
            }
            FunctionKind::NormPower { exponent } => {
                let sq: f64 = x.iter().map(|v| v * v).sum();
                if *exponent == 2.0 {
                    sq
                } else {
                    sq.sqrt().powf(*exponent)
                }
            }
            FunctionKind::QuadraticForm { matrix } => {
                let d = x.len();
                let mut acc = 0.0;
                for i in 0..d {
                    let row = &matrix[i * d..(i + 1) * d];
                    acc += x[i] * row.iter().zip(x).map(|(q, v)| q * v).sum::<f64>();
                }
                acc
            }
            FunctionKind::IndicatorComplement { lower, upper } => {
                let inside = x.iter().zip(lower.iter().zip(upper)).all(|(v, (a, b))| *a <= *v && *v <= *b);
                if inside {
                    0.0
                } else {
                    1.0
                }
            }
            FunctionKind::LinearCombination { terms } => terms
                .iter()
                .filter(|(w, _)| *w > 0.0)
                .map(|(w, f)| w * f.value(x))
                .sum(),
            FunctionKind::Negated(inner) => -inner.value(x),
            FunctionKind::Callback { f, .. } => f(x),
        }
    }

    /// Interval enclosure of the function over the box `[lo, hi]`
    /// (bounds may be infinite).
    pub(crate) fn range_on_box(&self, lo: &[f64], hi: &[f64]) -> (f64, f64) {
        let declared = (self.attributes.lower_bound, self.attributes.upper_bound);
        let computed = match &self.kind {
            FunctionKind::Power { axis, exponent, absolute } => {
                let (a, b) = (lo[*axis], hi[*axis]);
                let odd_signed = !*absolute && (*exponent as i64) % 2 == 1;
                if odd_signed {
                    let p = *exponent as i32;
                    (a.powi(p), b.powi(p))
                } else {
                    let (m, big) = abs_range(a, b);
                    (m.powf(*exponent), big.powf(*exponent))
                }
            }
            FunctionKind::NormPower { exponent } => {
                let (mut near, mut far) = (0.0, 0.0);
                for i in 0..lo.len() {
                    let (m, big) = abs_range(lo[i], hi[i]);
                    near += m * m;
                    far += big * big;
                }
                (near.sqrt().powf(*exponent), far.sqrt().powf(*exponent))
            }
            FunctionKind::LinearCombination { terms } => {
                let mut acc = (0.0, 0.0);
                for (w, f) in terms.iter().filter(|(w, _)| *w > 0.0) {
                    let (a, b) = f.range_on_box(lo, hi);
                    acc.0 += if a.is_infinite() { a } else { w * a };
                    acc.1 += if b.is_infinite() { b } else { w * b };
                }
                (
                    if acc.0.is_nan() { f64::NEG_INFINITY } else { acc.0 },
                    if acc.1.is_nan() { f64::INFINITY } else { acc.1 },
                )
            }
            FunctionKind::Negated(inner) => {
                let (a, b) = inner.range_on_box(lo, hi);
                (-b, -a)
            }
            _ => declared,
        };
        (computed.0.max(declared.0), computed.1.min(declared.1))
    }
}

fn abs_range(a: f64, b: f64) -> (f64, f64) {
    let near = if a <= 0.0 && 0.0 <= b { 0.0 } else { a.abs().min(b.abs()) };
    (near, a.abs().max(b.abs()))
}

/// Evaluates `phi(x)` with dimension and finiteness checks.
pub fn evaluate(phi: &MeasurementFunction, x: &Point) -> Result<f64> {
    if x.dim() != phi.dimension {
        return Err(Error::DimensionMismatch { expected: phi.dimension, found: x.dim() });
    }
    let v = phi.value(x.coords());
    if !v.is_finite() {
        return Err(Error::NonFiniteValue { name: phi.name() });
    }
    Ok(v)
}
