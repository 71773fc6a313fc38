//! Optimal posterior-mean distribution as a linear program.
//!
//! On each affine piece of the revenue function only the mass `p` and the
//! mass-weighted mean `y` of posterior means in that piece matter, and the
//! revenue contribution `a*y + b*p` is linear. Feasibility requires every
//! prefix of pieces to hold at least the mean of the prior's lowest
//! quantiles of the same mass, `Y_k >= H(P_k)` with `H(u) = ∫_0^u F^{-1}`.
//! `H` is convex, so it is enforced by tangent cuts added lazily.

use microlp::{ComparisonOp, OptimizationDirection, Problem, Variable};
use serde::Serialize;

use super::OptimizerError;
use crate::model::Prior;
use crate::pwl::PiecewiseLinear;

const MAX_ROUNDS: usize = 500;
/// Accepted prefix violation.
const CUT_TOL: f64 = 1e-8;
/// Refinement target; masses converge like the square root of the violation.
const POLISH_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PieceAllocation {
    pub lo: f64,
    pub hi: f64,
    pub p: f64,
    pub y: f64,
}

impl PieceAllocation {
    /// Posterior mean of the piece's mass, clamped into the piece.
    pub fn mean(&self) -> Option<f64> {
        (self.p > 0.0).then(|| (self.y / self.p).clamp(self.lo, self.hi))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeAllocation {
    pub pieces: Vec<PieceAllocation>,
}

impl RegimeAllocation {
    /// Prior mass and partial mean of each piece.
    pub fn full_revelation(f: &PiecewiseLinear, prior: &Prior) -> Self {
        let pieces = support_cuts(f, prior)
            .windows(2)
            .map(|w| PieceAllocation { lo: w[0], hi: w[1], p: prior.mass(w[0], w[1]), y: prior.partial_expectation(w[0], w[1]) })
            .collect();
        RegimeAllocation { pieces }
    }

    pub fn objective(&self, f: &PiecewiseLinear) -> f64 {
        self.pieces
            .iter()
            .map(|c| {
                let line = f.chord(c.lo, c.hi);
                line.slope * c.y + line.intercept * c.p
            })
            .sum()
    }

    /// Largest `H(P_k) - Y_k` over prefixes.
    pub fn majorization_violation(&self, prior: &Prior) -> f64 {
        let (mut mass, mut mean, mut worst) = (0.0, 0.0, 0.0f64);
        for c in &self.pieces {
            mass += c.p;
            mean += c.y;
            worst = worst.max(prior.quantile_integral(mass.min(1.0)) - mean);
        }
        worst
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prop8Solution {
    pub allocation: RegimeAllocation,
    pub objective: f64,
    pub cuts: usize,
    pub rounds: usize,
    pub max_violation: f64,
}

/// Breakpoints of `f` inside the support, plus the support ends.
fn support_cuts(f: &PiecewiseLinear, prior: &Prior) -> Vec<f64> {
    let (lo, hi) = (prior.lo(), prior.hi());
    let mut cuts = vec![lo];
    cuts.extend(f.simplified().breakpoints().iter().copied().filter(|x| *x > lo && *x < hi));
    cuts.push(hi);
    cuts
}

struct Cut {
    prefix: usize,
    slope: f64,
    rhs: f64,
}

fn tangent_cut(prior: &Prior, prefix: usize, u: f64) -> Cut {
    let t = prior.inv_cdf(u);
    Cut { prefix, slope: t, rhs: prior.quantile_integral(u) - u * t }
}

fn add_cut(problem: &mut Problem, p: &[Variable], y: &[Variable], cut: &Cut) {
    let mut expr: Vec<(Variable, f64)> = Vec::with_capacity(2 * (cut.prefix + 1));
    for k in 0..=cut.prefix {
        expr.push((y[k], 1.0));
        expr.push((p[k], -cut.slope));
    }
    problem.add_constraint(expr, ComparisonOp::Ge, cut.rhs);
}

/// Maximizes expected revenue over all feasible posterior-mean distributions.
/// Cuts are seeded at every multiple of `eps` and refined at violated prefixes.
pub fn solve_prop8(f: &PiecewiseLinear, prior: &Prior, eps: f64) -> Result<Prop8Solution, OptimizerError> {
    if !(eps > 0.0 && eps <= 0.5) {
        return Err(OptimizerError::InvalidEps(eps));
    }
    let cuts_at = support_cuts(f, prior);
    let pieces = cuts_at.len() - 1;
    let mut problem = Problem::new(OptimizationDirection::Maximize);
    let mut p = Vec::with_capacity(pieces);
    let mut y = Vec::with_capacity(pieces);
    for w in cuts_at.windows(2) {
        let line = f.chord(w[0], w[1]);
        p.push(problem.add_var(line.intercept, (0.0, 1.0)));
        y.push(problem.add_var(line.slope, (w[0].min(0.0), w[1].max(0.0))));
    }
    for (k, w) in cuts_at.windows(2).enumerate() {
        problem.add_constraint([(y[k], 1.0), (p[k], -w[0])], ComparisonOp::Ge, 0.0);
        problem.add_constraint([(y[k], 1.0), (p[k], -w[1])], ComparisonOp::Le, 0.0);
    }
    problem.add_constraint(p.iter().map(|v| (*v, 1.0)).collect::<Vec<_>>(), ComparisonOp::Eq, 1.0);
    problem.add_constraint(y.iter().map(|v| (*v, 1.0)).collect::<Vec<_>>(), ComparisonOp::Eq, prior.mean());

    // Seeds: the eps-grid plus the quantiles of the breakpoints, where
    // revealed regions of an optimal solution end.
    let steps = (1.0 / eps).round() as usize;
    let mut seeds: Vec<f64> = (1..steps).map(|l| l as f64 * eps).collect();
    seeds.extend(cuts_at.iter().map(|&x| prior.cdf(x)).filter(|u| *u > 0.0 && *u < 1.0));
    let mut cuts = 0;
    for prefix in 0..pieces.saturating_sub(1) {
        for &u in &seeds {
            add_cut(&mut problem, &p, &y, &tangent_cut(prior, prefix, u));
            cuts += 1;
        }
    }
    let mut best_worst = f64::INFINITY;
    let mut stale = 0;

    for round in 1..=MAX_ROUNDS {
        let solution = problem
            .solve()
            .map_err(|e| OptimizerError::Lp(e.to_string()))?
            .into_solution()
            .map_err(|e| OptimizerError::Lp(format!("{:?}", e.termination_reason())))?;
        let allocation = RegimeAllocation {
            pieces: cuts_at
                .windows(2)
                .enumerate()
                .map(|(k, w)| PieceAllocation {
                    lo: w[0],
                    hi: w[1],
                    p: solution.var_value(p[k]).max(0.0),
                    y: solution.var_value(y[k]),
                })
                .collect(),
        };
        let (mut mass, mut mean, mut worst) = (0.0, 0.0, 0.0f64);
        let mut fresh = Vec::new();
        for (k, c) in allocation.pieces.iter().enumerate().take(pieces.saturating_sub(1)) {
            mass += c.p;
            mean += c.y;
            let u = mass.clamp(0.0, 1.0);
            let gap = prior.quantile_integral(u) - mean;
            worst = worst.max(gap);
            if gap > POLISH_TOL && u > 0.0 && u < 1.0 {
                fresh.push(tangent_cut(prior, k, u));
            }
        }
        if worst < best_worst {
            best_worst = worst;
            stale = 0;
        } else {
            stale += 1;
        }
        let settled = worst <= POLISH_TOL || fresh.is_empty() || (stale >= 5 && worst <= CUT_TOL);
        if settled || round == MAX_ROUNDS {
            if worst > CUT_TOL {
                return Err(OptimizerError::SolverStall { rounds: round, violation: worst });
            }
            let objective = allocation.objective(f);
            return Ok(Prop8Solution { allocation, objective, cuts, rounds: round, max_violation: worst });
        }
        for cut in &fresh {
            add_cut(&mut problem, &p, &y, cut);
            cuts += 1;
        }
    }
    unreachable!("the last round always returns")
}
