//! Interval-partition dynamic program on a quantile grid.

use rayon::prelude::*;
use serde::Serialize;

use super::{OptimizerError, RevenueOracle};
use crate::mechanism::{Mode, MonotonePartitional};
use crate::model::Prior;

pub const MAX_BRUTE_FORCE_GRID: usize = 18;

/// Cutoffs at the prior's `eps`-quantiles, ending at the support's upper end.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuantileGrid {
    pub eps: f64,
    pub cutoffs: Vec<f64>,
}

impl QuantileGrid {
    pub fn new(prior: &Prior, eps: f64) -> Result<Self, OptimizerError> {
        if !(eps > 0.0 && eps <= 0.5) {
            return Err(OptimizerError::InvalidEps(eps));
        }
        let steps = (1.0 / eps).ceil() as usize;
        let mut cutoffs = vec![prior.lo()];
        for l in 1..steps {
            let c = prior.inv_cdf(l as f64 * eps);
            if c < 1.0 && l as f64 * eps >= 1.0 {
                break;
            }
            if c > cutoffs[cutoffs.len() - 1] && c < prior.hi() {
                cutoffs.push(c);
            }
        }
        cutoffs.push(prior.hi());
        Ok(QuantileGrid { eps, cutoffs })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DpResult {
    pub mechanism: MonotonePartitional,
    pub value: f64,
    /// Best value over cells ending at each cutoff.
    pub values: Vec<f64>,
    pub cutoffs: Vec<f64>,
}

impl DpResult {
    /// CSV of the value table: `l, cutoff, V`.
    pub fn values_csv(&self) -> String {
        let mut out = String::from("l,cutoff,V\n");
        for (l, (c, v)) in self.cutoffs.iter().zip(&self.values).enumerate() {
            out.push_str(&format!("{l},{},{}\n", crate::fmt_sig(*c), crate::fmt_sig(*v)));
        }
        out
    }
}

#[derive(Clone, Copy)]
struct Cell {
    value: f64,
    mode: Mode,
}

/// Probability-weighted value of pooling `[a, b]`, or of revealing it when
/// that is known and at least as good.
fn cell_value(oracle: &dyn RevenueOracle, prior: &Prior, a: f64, b: f64) -> Result<Cell, OptimizerError> {
    let mass = prior.mass(a, b);
    let pooled = if mass > 0.0 { mass * oracle.eval(prior.conditional_mean(a, b))? } else { 0.0 };
    Ok(match oracle.revealed_value(prior, a, b) {
        Some(revealed) if revealed >= pooled - 1e-9 * pooled.abs().max(1.0) => {
            Cell { value: revealed.max(pooled), mode: Mode::Reveal }
        }
        _ => Cell { value: pooled, mode: Mode::Pool },
    })
}

fn weights(oracle: &dyn RevenueOracle, prior: &Prior, cutoffs: &[f64]) -> Result<Vec<Vec<Cell>>, OptimizerError> {
    let n = cutoffs.len();
    (0..n)
        .into_par_iter()
        .map(|i| ((i + 1)..n).map(|j| cell_value(oracle, prior, cutoffs[i], cutoffs[j])).collect())
        .collect()
}

fn mechanism_from(prior: &Prior, cutoffs: &[f64], chosen: &[usize], modes: Vec<Mode>) -> MonotonePartitional {
    let cuts: Vec<f64> = chosen.iter().map(|&i| cutoffs[i]).collect();
    MonotonePartitional::new(prior, cuts, modes).expect("grid cutoffs span the support").canonical(prior)
}

/// Best partition using cutoffs from `cutoffs` (which must start and end at
/// the support's ends).
pub fn dp_on_grid(oracle: &dyn RevenueOracle, prior: &Prior, cutoffs: &[f64]) -> Result<DpResult, OptimizerError> {
    let n = cutoffs.len();
    let w = weights(oracle, prior, cutoffs)?;
    let mut values = vec![f64::NEG_INFINITY; n];
    let mut from = vec![0usize; n];
    values[0] = 0.0;
    for j in 1..n {
        for i in 0..j {
            let v = values[i] + w[i][j - i - 1].value;
            if v > values[j] {
                values[j] = v;
                from[j] = i;
            }
        }
    }
    let mut chosen = vec![n - 1];
    while let Some(&j) = chosen.last() {
        if j == 0 {
            break;
        }
        chosen.push(from[j]);
    }
    chosen.reverse();
    let modes = chosen.windows(2).map(|c| w[c[0]][c[1] - c[0] - 1].mode).collect();
    let mechanism = mechanism_from(prior, cutoffs, &chosen, modes);
    Ok(DpResult { mechanism, value: values[n - 1], values, cutoffs: cutoffs.to_vec() })
}

pub fn dp_partitional(oracle: &dyn RevenueOracle, prior: &Prior, eps: f64) -> Result<DpResult, OptimizerError> {
    let grid = QuantileGrid::new(prior, eps)?;
    dp_on_grid(oracle, prior, &grid.cutoffs)
}

/// Exhaustive search over subsets of the interior cutoffs `interior`, with
/// the better of pooling and revealing in every cell.
pub fn brute_force_partitional(
    oracle: &dyn RevenueOracle,
    prior: &Prior,
    interior: &[f64],
) -> Result<(MonotonePartitional, f64), OptimizerError> {
    if interior.len() > MAX_BRUTE_FORCE_GRID {
        return Err(OptimizerError::GridTooLarge { size: interior.len(), max: MAX_BRUTE_FORCE_GRID });
    }
    let mut cutoffs = vec![prior.lo()];
    cutoffs.extend(interior.iter().copied().filter(|c| *c > prior.lo() && *c < prior.hi()));
    cutoffs.push(prior.hi());
    let n = cutoffs.len();
    let w = weights(oracle, prior, &cutoffs)?;
    let inner = n - 2;
    let mut best = (f64::NEG_INFINITY, Vec::new());
    for mask in 0u32..(1u32 << inner) {
        let mut path = vec![0];
        path.extend((0..inner).filter(|b| mask & (1 << b) != 0).map(|b| b + 1));
        path.push(n - 1);
        let mut v = 0.0;
        for c in path.windows(2) {
            v += w[c[0]][c[1] - c[0] - 1].value;
        }
        if v > best.0 {
            best = (v, path);
        }
    }
    let modes = best.1.windows(2).map(|c| w[c[0]][c[1] - c[0] - 1].mode).collect();
    Ok((mechanism_from(prior, &cutoffs, &best.1, modes), best.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pwl::PiecewiseLinear;

    fn convex() -> PiecewiseLinear {
        PiecewiseLinear::from_points(&[(-2.0, -3.0), (0.0, -2.0), (4.0, 2.0), (6.0, 5.0)]).unwrap()
    }

    #[test]
    fn grid_is_nested_across_dyadic_steps() {
        let prior = Prior::truncated_gaussian(1.0, 2.0, -2.0, 6.0).unwrap();
        let coarse = QuantileGrid::new(&prior, 1.0 / 8.0).unwrap();
        let fine = QuantileGrid::new(&prior, 1.0 / 16.0).unwrap();
        assert_eq!(coarse.cutoffs.len(), 9);
        assert_eq!(fine.cutoffs[fine.cutoffs.len() - 1], 6.0);
        for c in &coarse.cutoffs {
            assert!(fine.cutoffs.contains(c));
        }
        assert!(QuantileGrid::new(&prior, 0.75).is_err());
    }

    #[test]
    fn convex_revenue_is_fully_revealed() {
        let prior = Prior::uniform(-2.0, 6.0).unwrap();
        let f = convex();
        let dp = dp_partitional(&f, &prior, 1.0 / 64.0).unwrap();
        assert!((dp.value - f.expectation(&prior)).abs() <= 1e-3 * f.expectation(&prior).abs());
        assert!(dp.mechanism.is_full_revelation());
    }

    #[test]
    fn brute_force_agrees_with_dp() {
        let prior = Prior::uniform(-2.0, 6.0).unwrap();
        let f = PiecewiseLinear::from_points(&[(-2.0, 0.0), (1.0, 3.0), (2.0, 2.5), (6.0, 9.0)]).unwrap();
        let interior: Vec<f64> = (1..12).map(|k| -2.0 + 8.0 * k as f64 / 12.0).collect();
        let (_, brute) = brute_force_partitional(&f, &prior, &interior).unwrap();
        let mut cutoffs = vec![-2.0];
        cutoffs.extend(&interior);
        cutoffs.push(6.0);
        let dp = dp_on_grid(&f, &prior, &cutoffs).unwrap();
        assert_eq!(dp.value, brute);
        let big: Vec<f64> = (1..20).map(|k| k as f64 * 0.1).collect();
        assert!(matches!(brute_force_partitional(&f, &prior, &big), Err(OptimizerError::GridTooLarge { .. })));
    }

    #[test]
    fn single_cutoff_grid_picks_best_of_extremes() {
        let prior = Prior::uniform(-2.0, 6.0).unwrap();
        let f = convex();
        let (_, v) = brute_force_partitional(&f, &prior, &[2.0]).unwrap();
        assert!((v - f.expectation(&prior)).abs() < 1e-12);
    }
}
