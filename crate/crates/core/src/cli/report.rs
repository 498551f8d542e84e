use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::certificate::{Certificate, ExistenceDiagnosis};
use crate::dual::DualSolution;
use crate::error::Result;
use crate::quadrature::IntegrationBudget;

pub const TOOL: &str = "maxent";
/// Version of the report layout.
pub const REPORT_SCHEMA: u32 = 1;

/// Work spent, in place of wall-clock timings so that reports stay
/// reproducible.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct WorkCounters {
    pub solver_iterations: usize,
    pub solver_evaluations: usize,
    pub certificate_evaluations: usize,
}

/// Every budget and tolerance a run used.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    pub solver_tol: f64,
    pub solver_max_iter: usize,
    pub solver_budget: IntegrationBudget,
    pub diagnosis_budget: IntegrationBudget,
    /// Budget and seed of the independent recomputation.
    pub certificate_budget: IntegrationBudget,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub tool: String,
    pub version: String,
    pub schema: u32,
    pub command: String,
    /// Outcome class; see [`super::ExitCode`].
    pub status: String,
    pub exit_code: i32,
    pub settings: Option<Settings>,
    pub diagnosis: Option<ExistenceDiagnosis>,
    pub solution: Option<DualSolution>,
    pub certificate: Option<Certificate>,
    pub work: WorkCounters,
    pub messages: Vec<String>,
    /// The configuration text exactly as read.
    pub config: String,
}

impl RunReport {
    pub fn new(command: &str, config: String) -> Self {
        Self {
            tool: TOOL.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            schema: REPORT_SCHEMA,
            command: command.into(),
            status: String::new(),
            exit_code: 0,
            settings: None,
            diagnosis: None,
            solution: None,
            certificate: None,
            work: WorkCounters::default(),
            messages: Vec::new(),
            config,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports contain only serializable values");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| crate::error::Error::Config { path: "report".into(), message: e.to_string() })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }
}

/// Formats a float with 17 significant digits.
pub fn full_precision(v: f64) -> String {
    format!("{v:.16e}")
}

/// Density CSV over the cell midpoints of a grid, rows restricted to the
/// support. Header `x_1,...,x_d,density`, LF line endings.
pub fn density_csv(
    lower: &[f64],
    upper: &[f64],
    cells_per_axis: usize,
    inside: impl Fn(&[f64]) -> bool,
    density: impl Fn(&[f64]) -> Result<f64>,
) -> Result<String> {
    let d = lower.len();
    let mut out = String::new();
    for i in 1..=d {
        out.push_str(&format!("x_{i},"));
    }
    out.push_str("density\n");
    let widths: Vec<f64> = (0..d).map(|i| (upper[i] - lower[i]) / cells_per_axis as f64).collect();
    let total = cells_per_axis.checked_pow(d as u32).unwrap_or(usize::MAX);
    let mut x = vec![0.0; d];
    for k in 0..total {
        let mut rem = k;
        for i in 0..d {
            x[i] = lower[i] + ((rem % cells_per_axis) as f64 + 0.5) * widths[i];
            rem /= cells_per_axis;
        }
        if !inside(&x) {
            continue;
        }
        let f = density(&x)?;
        for v in &x {
            out.push_str(&full_precision(*v));
            out.push(',');
        }
        out.push_str(&full_precision(f));
        out.push('\n');
    }
    Ok(out)
}
