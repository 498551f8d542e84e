//! TOML problem configuration.
//!
//! ```toml
//! schema = 1
//! dimension = 1
//!
//! [support]
//! shape = "box"
//! lower = [0.0]
//! upper = [inf]
//!
//! [[constraints]]
//! kind = "power"
//! exponent = 1
//! u = 1.0
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measurements::{equality_pair, Attributes, HalfSpace, MeasurementFunction, SupportSet};
use crate::quadrature::IntegrationBudget;

/// Only accepted value of the `schema` field.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub schema: u32,
    pub dimension: usize,
    pub support: SupportSpec,
    #[serde(default)]
    pub constraints: Vec<FunctionSpec>,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub quadrature: QuadratureSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShapeName {
    Full,
    Box,
    Halfspaces,
    BoxHalfspaces,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SupportSpec {
    pub shape: ShapeName,
    pub lower: Option<Vec<f64>>,
    pub upper: Option<Vec<f64>>,
    pub halfspaces: Option<Vec<HalfSpaceSpec>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HalfSpaceSpec {
    pub normal: Vec<f64>,
    pub offset: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KindName {
    Power,
    AbsPower,
    NormPower,
    QuadraticForm,
    IndicatorComplement,
    LinearCombination,
    Negated,
}

/// A measurement function; as a constraint it carries `u`, as a term of a
/// linear combination it carries `weight`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionSpec {
    pub kind: KindName,
    /// Zero-based coordinate index for `power` and `abs-power`.
    pub axis: Option<usize>,
    pub exponent: Option<f64>,
    /// Rows of `Q` for `quadratic-form`.
    pub matrix: Option<Vec<Vec<f64>>>,
    /// Corners of the box `A` for `indicator-complement`.
    pub lower: Option<Vec<f64>>,
    pub upper: Option<Vec<f64>>,
    /// Terms of a `linear-combination`, or the single inner function of
    /// `negated`.
    pub terms: Option<Vec<FunctionSpec>>,
    pub weight: Option<f64>,
    pub u: Option<f64>,
    /// Emit the pair `phi <= u`, `-phi <= -u`.
    #[serde(default)]
    pub equality: bool,
    pub declare: Option<DeclareSpec>,
}

/// Overrides for the derived structural attributes.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeclareSpec {
    pub lower_bound: Option<f64>,
    pub upper_bound: Option<f64>,
    pub convex: Option<bool>,
    pub coercive: Option<bool>,
    pub well_behaved: Option<bool>,
    pub well_behaved_radius: Option<f64>,
    pub quadratic_growth: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSpec {
    pub tol: f64,
    pub max_iter: usize,
    /// Evaluation budget of each integration during the solve.
    pub budget: usize,
    pub seed: u64,
}

impl Default for SolverSpec {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 200, budget: 2_000_000, seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureSpec {
    /// Evaluation budget of diagnostic integrations; certification uses four
    /// times this.
    pub budget: usize,
    pub target_rel_tol: f64,
    pub seed: u64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        let b = IntegrationBudget::default();
        Self { budget: b.max_evaluations, target_rel_tol: b.rel_tol, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSpec {
    pub report: String,
    pub csv: String,
    /// Cells per axis of the density grid.
    pub grid: Option<usize>,
    /// Grid box; defaults to the solution's truncation box.
    pub lower: Option<Vec<f64>>,
    pub upper: Option<Vec<f64>>,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self { report: "report.json".into(), csv: "density.csv".into(), grid: None, lower: None, upper: None }
    }
}

fn config_error(path: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Config { path: path.into(), message: message.into() }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Parses a configuration; errors name the offending field path.
pub fn parse_config(text: &str) -> Result<ProblemConfig> {
    let with_line = |e: &toml::de::Error| match e.span() {
        Some(span) => format!("{} (line {})", e.message(), line_of(text, span.start)),
        None => e.message().to_string(),
    };
    let de = toml::Deserializer::parse(text).map_err(|e| config_error("(document)", with_line(&e)))?;
    let config: ProblemConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        config_error(path, with_line(e.inner()))
    })?;
    if config.schema != SCHEMA_VERSION {
        return Err(config_error("schema", format!("unsupported schema {}, expected {SCHEMA_VERSION}", config.schema)));
    }
    if config.dimension == 0 {
        return Err(config_error("dimension", "must be at least 1"));
    }
    Ok(config)
}

fn require<T: Clone>(v: &Option<T>, path: &str, kind: KindName) -> Result<T> {
    v.clone().ok_or_else(|| config_error(path, format!("required for kind {kind:?}")))
}

fn check_len(v: &[f64], d: usize, path: &str) -> Result<()> {
    if v.len() != d {
        return Err(config_error(path, format!("expected {d} entries, found {}", v.len())));
    }
    Ok(())
}

impl ProblemConfig {
    pub fn support_set(&self) -> Result<SupportSet> {
        let d = self.dimension;
        let s = &self.support;
        let bound = |v: &Option<Vec<f64>>, name: &str, fill: f64| -> Result<Vec<f64>> {
            match v {
                Some(v) => {
                    check_len(v, d, &format!("support.{name}"))?;
                    Ok(v.clone())
                }
                None => Ok(vec![fill; d]),
            }
        };
        let halfspaces = || -> Result<Vec<HalfSpace>> {
            let hs = s.halfspaces.as_ref().ok_or_else(|| config_error("support.halfspaces", "required for this shape"))?;
            hs.iter()
                .enumerate()
                .map(|(i, h)| {
                    check_len(&h.normal, d, &format!("support.halfspaces[{i}].normal"))?;
                    Ok(HalfSpace { normal: h.normal.clone(), offset: h.offset })
                })
                .collect()
        };
        let wrap = |e: Error| config_error("support", e.to_string());
        match s.shape {
            ShapeName::Full => SupportSet::full(d).map_err(wrap),
            ShapeName::Box => SupportSet::boxed(
                bound(&s.lower, "lower", f64::NEG_INFINITY)?,
                bound(&s.upper, "upper", f64::INFINITY)?,
            )
            .map_err(wrap),
            ShapeName::Halfspaces => SupportSet::halfspaces(d, halfspaces()?).map_err(wrap),
            ShapeName::BoxHalfspaces => SupportSet::box_with_halfspaces(
                bound(&s.lower, "lower", f64::NEG_INFINITY)?,
                bound(&s.upper, "upper", f64::INFINITY)?,
                halfspaces()?,
            )
            .map_err(wrap),
        }
    }

    /// Constraint pairs `(phi, u)`, with equality constraints expanded.
    pub fn constraint_pairs(&self) -> Result<Vec<(MeasurementFunction, f64)>> {
        let mut out = Vec::new();
        for (i, c) in self.constraints.iter().enumerate() {
            let path = format!("constraints[{i}]");
            if c.weight.is_some() {
                return Err(config_error(format!("{path}.weight"), "only allowed on linear-combination terms"));
            }
            let u = c.u.ok_or_else(|| config_error(format!("{path}.u"), "missing bound"))?;
            let phi = build_function(c, self.dimension, &path)?;
            if c.equality {
                out.extend(equality_pair(phi, u));
            } else {
                out.push((phi, u));
            }
        }
        Ok(out)
    }

    pub fn solver_budget(&self) -> IntegrationBudget {
        IntegrationBudget {
            max_evaluations: self.solver.budget,
            rel_tol: self.quadrature.target_rel_tol,
            seed: self.solver.seed,
        }
    }

    pub fn quadrature_budget(&self) -> IntegrationBudget {
        IntegrationBudget {
            max_evaluations: self.quadrature.budget,
            rel_tol: self.quadrature.target_rel_tol,
            seed: self.quadrature.seed,
        }
    }

    /// Replaces every seed, as `MAXENT_SEED` does.
    pub fn override_seed(&mut self, seed: u64) {
        self.solver.seed = seed;
        self.quadrature.seed = seed;
    }
}

fn build_function(spec: &FunctionSpec, d: usize, path: &str) -> Result<MeasurementFunction> {
    let field = |name: &str| format!("{path}.{name}");
    let wrap = |e: Error| config_error(path, e.to_string());
    let kind = spec.kind;
    let axis = spec.axis.unwrap_or(0);
    let phi = match kind {
        KindName::Power => {
            let p = require(&spec.exponent, &field("exponent"), kind)?;
            if p.fract() != 0.0 || p < 1.0 || p > i32::MAX as f64 {
                return Err(config_error(field("exponent"), "power needs a positive integer exponent; use abs-power otherwise"));
            }
            MeasurementFunction::power(d, axis, p as u32).map_err(wrap)?
        }
        KindName::AbsPower => MeasurementFunction::abs_power(d, axis, require(&spec.exponent, &field("exponent"), kind)?).map_err(wrap)?,
        KindName::NormPower => MeasurementFunction::norm_power(d, require(&spec.exponent, &field("exponent"), kind)?).map_err(wrap)?,
        KindName::QuadraticForm => {
            let rows = require(&spec.matrix, &field("matrix"), kind)?;
            if rows.len() != d || rows.iter().any(|r| r.len() != d) {
                return Err(config_error(field("matrix"), format!("expected a {d}x{d} matrix")));
            }
            MeasurementFunction::quadratic_form(d, rows.concat()).map_err(wrap)?
        }
        KindName::IndicatorComplement => {
            let lo = require(&spec.lower, &field("lower"), kind)?;
            let hi = require(&spec.upper, &field("upper"), kind)?;
            check_len(&lo, d, &field("lower"))?;
            check_len(&hi, d, &field("upper"))?;
            MeasurementFunction::indicator_complement(lo, hi).map_err(wrap)?
        }
        KindName::LinearCombination => {
            let terms = require(&spec.terms, &field("terms"), kind)?;
            let mut built = Vec::with_capacity(terms.len());
            for (k, t) in terms.iter().enumerate() {
                let tpath = format!("{path}.terms[{k}]");
                if t.u.is_some() || t.equality {
                    return Err(config_error(tpath, "terms carry a weight, not a bound"));
                }
                let w = t.weight.ok_or_else(|| config_error(format!("{tpath}.weight"), "missing weight"))?;
                built.push((w, build_function(t, d, &tpath)?));
            }
            MeasurementFunction::linear_combination(built).map_err(wrap)?
        }
        KindName::Negated => {
            let terms = require(&spec.terms, &field("terms"), kind)?;
            let [inner] = terms.as_slice() else {
                return Err(config_error(field("terms"), "negated takes exactly one term"));
            };
            MeasurementFunction::negated(build_function(inner, d, &format!("{path}.terms[0]"))?)
        }
    };
    Ok(match spec.declare {
        Some(decl) => {
            let base = *phi.attributes();
            let radius = decl.well_behaved_radius.or(base.well_behaved_radius);
            phi.declare(Attributes {
                lower_bound: decl.lower_bound.unwrap_or(base.lower_bound),
                upper_bound: decl.upper_bound.unwrap_or(base.upper_bound),
                is_convex: decl.convex.unwrap_or(base.is_convex),
                is_coercive: decl.coercive.unwrap_or(base.is_coercive),
                is_well_behaved: decl.well_behaved.unwrap_or(base.is_well_behaved),
                well_behaved_radius: radius,
                quadratic_growth: decl.quadratic_growth.or(base.quadratic_growth),
            })
        }
        None => phi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXPONENTIAL: &str = r#"
schema = 1
dimension = 1

[support]
shape = "box"
lower = [0.0]
upper = [inf]

[[constraints]]
kind = "power"
exponent = 1
u = 1.0
"#;

    #[test]
    fn parses_exponential() {
        let c = parse_config(EXPONENTIAL).unwrap();
        let s = c.support_set().unwrap();
        assert!(!s.finite_volume());
        let pairs = c.constraint_pairs().unwrap();
        assert_eq!(pairs.len(), 1);
        assert_eq!(pairs[0].1, 1.0);
        assert_eq!(c.solver, SolverSpec::default());
    }

    #[test]
    fn malformed_bound_names_its_path() {
        let text = EXPONENTIAL.replace("u = 1.0", "u = []");
        match parse_config(&text) {
            Err(Error::Config { path, message }) => {
                assert_eq!(path, "constraints[0].u");
                assert!(message.contains("line 13"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_field_rejected() {
        let text = EXPONENTIAL.replace("u = 1.0", "u = 1.0\ncolour = 3");
        assert!(matches!(parse_config(&text), Err(Error::Config { .. })));
    }

    #[test]
    fn wrong_schema_rejected() {
        let text = EXPONENTIAL.replace("schema = 1", "schema = 2");
        assert!(matches!(parse_config(&text), Err(Error::Config { path, .. }) if path == "schema"));
    }

    #[test]
    fn missing_bound_and_exponent() {
        let c = parse_config(&EXPONENTIAL.replace("u = 1.0\n", "")).unwrap();
        assert!(matches!(c.constraint_pairs(), Err(Error::Config { path, .. }) if path == "constraints[0].u"));
        let c = parse_config(&EXPONENTIAL.replace("exponent = 1\n", "")).unwrap();
        assert!(matches!(c.constraint_pairs(), Err(Error::Config { path, .. }) if path == "constraints[0].exponent"));
    }

    #[test]
    fn combination_equality_and_declarations() {
        let text = r#"
schema = 1
dimension = 1
support = { shape = "full" }

[[constraints]]
kind = "linear-combination"
u = 3.0
terms = [
  { kind = "power", exponent = 2, weight = 1.0 },
  { kind = "abs-power", exponent = 1.0, weight = 2.0 },
]

[[constraints]]
kind = "abs-power"
exponent = 1.0
u = 0.5
equality = true
declare = { upper_bound = 1e300 }
"#;
        let c = parse_config(text).unwrap();
        let pairs = c.constraint_pairs().unwrap();
        assert_eq!(pairs.len(), 3);
        assert_eq!(pairs[0].0.value(&[2.0]), 8.0);
        assert_eq!(pairs[2].1, -0.5);
    }
}
