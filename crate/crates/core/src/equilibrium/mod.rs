//! Equilibrium distributions of agents and the platform's revenue function.

mod potential;
mod regimes;
mod revenue;

pub use potential::{potential, revenue, solve_potential, Equilibrium, StrategyProfile};
pub use regimes::{
    check_regularity, check_regularity_points, regimes_general, regimes_simple, Regime, RegimeKind, RegimeTable,
    RegularityReport,
};
pub use revenue::revenue_function;

use thiserror::Error;

use crate::model::ModelError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EquilibriumError {
    #[error("potential solver stopped after {iterations} sweeps with gap {gap:e}")]
    NonConvergence { iterations: usize, gap: f64 },
    #[error("expected {expected} intercepts, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("assumption violated: {0}")]
    AssumptionViolated(String),
    #[error("node {node} has zero price elasticity")]
    ZeroElasticity { node: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}
