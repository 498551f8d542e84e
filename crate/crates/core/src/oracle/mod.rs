//! Ground truth for testing: closed-form maximum-entropy fixtures and an
//! independent lattice solver that shares no code with [`crate::dual`].

mod fixtures;
mod grid;

pub use fixtures::{analytic_fixtures, fixture_named, AnalyticFixture};
pub use grid::{grid_solve, GridMaxent};
