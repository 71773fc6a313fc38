//! Sufficient conditions for a monotone partitional mechanism to be optimal.

use serde::Serialize;

use crate::model::Prior;
use crate::pwl::{concave_intervals, tangent_between, PiecewiseLinear, TangentLine};

/// One pair of concave intervals sharing a supporting line.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairWitness {
    pub tangent: TangentLine,
    /// End of `{line >= R}` left of the lower touch point.
    pub z_lo: f64,
    /// End of `{line >= R}` right of the upper touch point.
    pub z_hi: f64,
    pub c3: bool,
    /// Slacks of the three prior inequalities; all nonnegative means the pair passes.
    pub c4_slacks: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    pub c1: bool,
    pub c2: bool,
    pub c3: bool,
    pub c4: bool,
    pub concave_intervals: usize,
    pub pairs: Vec<PairWitness>,
}

impl ConditionReport {
    pub fn any(&self) -> bool {
        self.c1 || self.c2 || self.c3 || self.c4
    }
}

/// Slacks of the prior inequalities for a double pool `x < y` inside `[z_lo, z_hi]`.
///
/// The first two ask that the lowest and highest feasible pools around each
/// touch point cannot straddle it; the third bounds the spread available to
/// the `x` atom by its mass `p_x`.
fn prior_slacks(prior: &Prior, x: f64, y: f64, z_lo: f64, z_hi: f64) -> [f64; 3] {
    let first = prior.conditional_mean(z_lo, y) - x;
    let second = y - prior.conditional_mean(x, z_hi);
    let mass = prior.mass(z_lo, z_hi);
    let p_x = (y * mass - prior.partial_expectation(z_lo, z_hi)) / (y - x);
    let third = if p_x <= 0.0 || p_x >= mass {
        0.0
    } else {
        let f_lo = prior.cdf(z_lo);
        let cut = prior.inv_cdf(f_lo + p_x);
        let spread = prior.cdf_integral(cut) - prior.cdf_integral(z_lo) - f_lo * (cut - z_lo);
        (cut - x) * p_x - spread
    };
    [first, second, third]
}

pub fn check_conditions(f: &PiecewiseLinear, prior: &Prior) -> ConditionReport {
    let intervals = concave_intervals(f);
    let mean = prior.mean();
    let width_tol = 1e-12 * (prior.hi() - prior.lo()).max(1.0);
    let mut pairs = Vec::new();
    for lower in 0..intervals.len() {
        for upper in (lower + 1)..intervals.len() {
            let Some(tangent) = tangent_between(f, lower, upper) else {
                continue;
            };
            let (z_lo, _) = f.touching_component(tangent.line, tangent.x, tangent.x);
            let (_, z_hi) = f.touching_component(tangent.line, tangent.y, tangent.y);
            let (x, y) = (tangent.x, tangent.y);
            let c3 = (x < mean && y < mean && z_hi >= prior.hi() - width_tol)
                || (x > mean && y > mean && z_lo <= prior.lo() + width_tol);
            let c4_slacks = prior_slacks(prior, x, y, z_lo, z_hi);
            pairs.push(PairWitness { tangent, z_lo, z_hi, c3, c4_slacks });
        }
    }
    ConditionReport {
        c1: intervals.len() <= 1,
        c2: pairs.is_empty(),
        c3: pairs.iter().all(|p| p.c3),
        c4: pairs.iter().all(|p| p.c4_slacks.iter().all(|s| *s >= -1e-12)),
        concave_intervals: intervals.len(),
        pairs,
    }
}
