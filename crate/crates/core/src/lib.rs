//! Maximum-entropy densities on `R^d` under moment inequality constraints.
//!
//! The density maximising `-int pi ln pi` subject to
//! `E_pi[phi_g] <= u_g` and `supp(pi) in S` has the form
//! `1_S exp(-alpha - sum_g lambda_g phi_g)` with `lambda >= 0` and
//! complementary slackness. This crate
//!
//! * builds such problems from [`measurements`],
//! * decides whether a solution is guaranteed to exist
//!   ([`certificate::diagnose_existence`]),
//! * finds the multipliers by minimising the convex dual ([`dual::solve`]),
//! * certifies any candidate independently ([`certificate::certify`]),
//! * and checks all of it against closed forms and a lattice solver
//!   ([`oracle`]).
//!
//! Integrals are computed by adaptive cubature in low dimension and by
//! importance sampling above three ([`quadrature`]). The [`cli`] module is
//! the front end of the `maxent` binary.
//!
//! ```
//! use maxent::dual::{solve, SolveOptions};
//! use maxent::measurements::{MeasurementFunction, MomentProblem, SupportSet};
//!
//! let abs = MeasurementFunction::abs_power(1, 0, 1.0)?;
//! let problem = MomentProblem::new(SupportSet::full(1)?, vec![(abs, 1.0)])?;
//! let solution = solve(&problem, &SolveOptions::default())?;
//! assert!((solution.entropy - (1.0 + 2f64.ln())).abs() < 1e-6);
//! # Ok::<(), maxent::error::Error>(())
//! ```

// `!(a < b)` is deliberate: it treats NaN as failure.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Quadrature nodes are kept at their published precision.
#![allow(clippy::excessive_precision)]

pub mod certificate;
pub mod cli;
pub mod dual;
pub mod error;
mod lowdisc;
pub mod measurements;
pub mod oracle;
pub mod quadrature;

pub use error::{Error, Result};

// Runs the code blocks of the guide as doc-tests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/problems.md")]
    mod problems {}
    #[doc = include_str!("../../../book/src/existence.md")]
    mod existence {}
    #[doc = include_str!("../../../book/src/solving.md")]
    mod solving {}
    #[doc = include_str!("../../../book/src/certificates.md")]
    mod certificates {}
    #[doc = include_str!("../../../book/src/quadrature.md")]
    mod quadrature {}
    #[doc = include_str!("../../../book/src/oracles.md")]
    mod oracles {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
