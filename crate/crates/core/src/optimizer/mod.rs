//! Optimal disclosure: a linear program over per-piece posterior mass and
//! mean, recovery of the pooling structure from its solution, and a
//! quantile-grid dynamic program over interval partitions.

mod dp;
mod prop8;
mod recover;
mod scenario;

pub use dp::{brute_force_partitional, dp_on_grid, dp_partitional, DpResult, QuantileGrid, MAX_BRUTE_FORCE_GRID};
pub use prop8::{solve_prop8, PieceAllocation, Prop8Solution, RegimeAllocation};
pub use recover::{recover_structure, Recovery};
pub use scenario::{dp_multi_scenario, MultiScenarioResult, Scenario};

use thiserror::Error;

use crate::equilibrium::{revenue, solve_potential, EquilibriumError};
use crate::mechanism::MechanismError;
use crate::model::{Network, Prior};
use crate::pwl::PiecewiseLinear;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimizerError {
    #[error("cutting planes stalled after {rounds} rounds (violation {violation:e})")]
    SolverStall { rounds: usize, violation: f64 },
    #[error("linear program failed: {0}")]
    Lp(String),
    #[error("structure recovery failed: {0}")]
    RecoveryMismatch(String),
    #[error("grid of {size} cutoffs exceeds the brute-force limit of {max}")]
    GridTooLarge { size: usize, max: usize },
    #[error("quantile step {0} must lie in (0, 0.5]")]
    InvalidEps(f64),
    #[error("invalid scenario set: {0}")]
    InvalidScenario(String),
    #[error(transparent)]
    Equilibrium(#[from] EquilibriumError),
    #[error(transparent)]
    Mechanism(#[from] MechanismError),
}

/// Revenue at a posterior mean, and optionally the exact value of revealing
/// a cell.
pub trait RevenueOracle: Sync {
    fn eval(&self, z: f64) -> Result<f64, OptimizerError>;

    /// `∫_a^b R dF` when it is available in closed form.
    fn revealed_value(&self, _prior: &Prior, _a: f64, _b: f64) -> Option<f64> {
        None
    }
}

impl RevenueOracle for PiecewiseLinear {
    fn eval(&self, z: f64) -> Result<f64, OptimizerError> {
        Ok(PiecewiseLinear::eval(self, z))
    }

    fn revealed_value(&self, prior: &Prior, a: f64, b: f64) -> Option<f64> {
        Some(self.integrate(prior, a, b))
    }
}

/// Revenue from the equilibrium solver at intercepts `base + z * direction`.
#[derive(Debug, Clone)]
pub struct PotentialOracle<'a> {
    net: &'a Network,
    base: Vec<f64>,
    direction: Vec<f64>,
}

impl<'a> PotentialOracle<'a> {
    /// Shock at node 0 only: intercepts `(z, s_1, ..., s_n)`.
    pub fn single_shock(net: &'a Network) -> Self {
        let mut direction = vec![0.0; net.len()];
        direction[0] = 1.0;
        PotentialOracle { net, base: net.intercepts(0.0), direction }
    }

    /// Shock along `direction` on top of every node's market size.
    pub fn with_direction(net: &'a Network, direction: Vec<f64>) -> Self {
        PotentialOracle { net, base: net.intercepts(net.nodes()[0].market_size), direction }
    }

    pub fn intercepts(&self, z: f64) -> Vec<f64> {
        self.base.iter().zip(&self.direction).map(|(s, v)| s + z * v).collect()
    }
}

impl RevenueOracle for PotentialOracle<'_> {
    fn eval(&self, z: f64) -> Result<f64, OptimizerError> {
        let s = self.intercepts(z);
        let eq = solve_potential(self.net, &s)?;
        Ok(revenue(self.net, &s, &eq.profile.q))
    }
}
