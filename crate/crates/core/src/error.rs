use thiserror::Error;

use crate::dual::DualSolution;

/// Errors produced while building, integrating, solving or certifying a
/// moment problem.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite input coordinate at index {index}")]
    NonFiniteInput { index: usize },

    #[error("measurement function `{name}` returned a non-finite value")]
    NonFiniteValue { name: String },

    #[error("invalid measurement function: {0}")]
    InvalidFunction(String),

    #[error("invalid support set: {0}")]
    InvalidSupport(String),

    #[error("invalid moment problem: {0}")]
    InvalidProblem(String),

    #[error("constraint {index} is not bounded below on the support")]
    UnboundedBelow { index: usize },

    #[error("constraint {index}: sampled value {value} lies below the declared lower bound {bound}")]
    LowerBoundViolated { index: usize, value: f64, bound: f64 },

    #[error("weight {index} is negative or non-finite: {weight}")]
    InvalidWeight { index: usize, weight: f64 },

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("invalid multipliers: {0}")]
    InvalidMultipliers(String),

    #[error("integral diverges (tail mass stopped shrinking at truncation radius {radius})")]
    DivergentIntegral { radius: f64 },

    #[error("partition function diverges: {0}")]
    DivergentPartition(String),

    #[error("function is not declared well-behaved or convex and coercive: {0}")]
    NotDeclared(String),

    #[error("declaration inconsistent with sampled behaviour: {}", violations.join("; "))]
    DeclarationInconsistent { violations: Vec<String> },

    #[error("solver did not converge after {iterations} iterations (projected gradient {projected_gradient:e})")]
    NotConverged {
        iterations: usize,
        projected_gradient: f64,
        solution: Box<DualSolution>,
    },

    #[error("rejection sampler acceptance rate collapsed to {rate:e} after {trials} trials")]
    AcceptanceCollapse { rate: f64, trials: usize },

    #[error("no distribution on the grid satisfies the constraints: {0}")]
    InfeasibleDiscretization(String),

    #[error("{path}: {message}")]
    Config { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
