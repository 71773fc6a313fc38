//! Several shock directions, one of which is realised and announced; the
//! shock intensity is then disclosed through a partition per scenario.

use rayon::prelude::*;
use serde::Serialize;

use super::{dp_partitional, DpResult, OptimizerError, PotentialOracle};
use crate::model::{Network, Prior};

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub probability: f64,
    /// Intercept change per unit of intensity, one entry per node.
    pub direction: Vec<f64>,
    /// Distribution of the intensity.
    pub prior: Prior,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultiScenarioResult {
    pub scenarios: Vec<DpResult>,
    pub total: f64,
}

pub fn dp_multi_scenario(net: &Network, scenarios: &[Scenario], eps: f64) -> Result<MultiScenarioResult, OptimizerError> {
    if scenarios.is_empty() {
        return Err(OptimizerError::InvalidScenario("no scenarios".into()));
    }
    let mass: f64 = scenarios.iter().map(|s| s.probability).sum();
    if scenarios.iter().any(|s| !(s.probability >= 0.0)) || (mass - 1.0).abs() > 1e-9 {
        return Err(OptimizerError::InvalidScenario(format!("probabilities sum to {mass}")));
    }
    if let Some(s) = scenarios.iter().find(|s| s.direction.len() != net.len()) {
        return Err(OptimizerError::InvalidScenario(format!(
            "direction has {} entries for {} nodes",
            s.direction.len(),
            net.len()
        )));
    }
    let results: Vec<DpResult> = scenarios
        .par_iter()
        .map(|s| dp_partitional(&PotentialOracle::with_direction(net, s.direction.clone()), &s.prior, eps))
        .collect::<Result<_, _>>()?;
    let total = scenarios.iter().zip(&results).map(|(s, r)| s.probability * r.value).sum();
    Ok(MultiScenarioResult { scenarios: results, total })
}
