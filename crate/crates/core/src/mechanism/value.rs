//! Revenue gain of the optimal disclosure over disclosing nothing.

use super::{algorithm1_thresholds, expected_revenue};
use crate::equilibrium::RegimeTable;
use crate::model::Prior;
use crate::optimizer::{dp_partitional, solve_prop8};
use crate::pwl::PiecewiseLinear;

/// Which optimizer supplies the optimal revenue.
#[derive(Debug, Clone, Copy)]
pub enum Solver<'a> {
    /// Closed-form reveal-pool-reveal; needs the regime table for the market pattern.
    Algorithm1(&'a RegimeTable),
    Prop8 { eps: f64 },
    Dp { eps: f64 },
}

/// Optimal expected revenue minus the revenue at the prior mean.
///
/// Every solver can pool the whole support, so the gain is clamped at zero
/// to absorb rounding.
pub fn value_of_information(f: &PiecewiseLinear, prior: &Prior, solver: Solver<'_>) -> Result<f64, crate::Error> {
    let best = match solver {
        Solver::Algorithm1(table) => {
            let out = algorithm1_thresholds(table, f, prior)?;
            expected_revenue(f, &out.mechanism, prior)
        }
        Solver::Prop8 { eps } => solve_prop8(f, prior, eps)?.objective,
        Solver::Dp { eps } => dp_partitional(f, prior, eps)?.value,
    };
    Ok((best - f.eval(prior.mean())).max(0.0))
}
