//! Potential maximization over the transportation polytope.
//!
//! Each origin's row lives on a scaled simplex. A sweep moves mass, per
//! origin, from its worst used destination to its best one with an exact
//! line search; the objective is quadratic along that direction.

use serde::Serialize;

use super::EquilibriumError;
use crate::model::Network;

const MAX_SWEEPS: usize = 100_000;

/// Agent flows `x[i][j]` from origin `i` to destination `j` and the induced
/// distribution `q[j] = Σ_i x[i][j]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrategyProfile {
    pub x: Vec<Vec<f64>>,
    pub q: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Equilibrium {
    pub profile: StrategyProfile,
    pub potential: f64,
    /// Largest utility gain available to any used route.
    pub residual: f64,
    /// Frank-Wolfe duality gap at the returned profile.
    pub gap: f64,
    pub sweeps: usize,
}

struct Game<'a> {
    net: &'a Network,
    s: &'a [f64],
    keep: f64,
}

impl Game<'_> {
    fn price_utility(&self, q: &[f64], j: usize) -> f64 {
        let nd = self.net.nodes()[j];
        self.keep * (self.s[j] - nd.beta * q[j])
    }

    fn route_utilities(&self, q: &[f64]) -> Vec<f64> {
        (0..q.len()).map(|j| self.price_utility(q, j)).collect()
    }
}

fn column_sums(x: &[Vec<f64>]) -> Vec<f64> {
    let n = x.len();
    (0..n).map(|j| x.iter().map(|row| row[j]).sum()).collect()
}

/// Potential `(1-r) Σ_j ∫_0^{q_j} (s_j - β_j z) dz - Σ c_ij x_ij`.
pub fn potential(net: &Network, intercepts: &[f64], x: &[Vec<f64>]) -> f64 {
    let keep = 1.0 - net.commission();
    let q = column_sums(x);
    let mut phi = 0.0;
    for (j, nd) in net.nodes().iter().enumerate() {
        phi += keep * (intercepts[j] * q[j] - 0.5 * nd.beta * q[j] * q[j]);
    }
    for (i, row) in x.iter().enumerate() {
        for (j, &flow) in row.iter().enumerate() {
            phi -= net.cost(i, j) * flow;
        }
    }
    phi
}

/// Platform revenue `r Σ_j (s_j - β_j q_j) q_j`.
pub fn revenue(net: &Network, intercepts: &[f64], q: &[f64]) -> f64 {
    let r = net.commission();
    net.nodes()
        .iter()
        .enumerate()
        .map(|(j, nd)| (intercepts[j] - nd.beta * q[j]) * q[j])
        .sum::<f64>()
        * r
}

/// Largest gain any used route could obtain by switching, and the duality gap.
fn optimality(game: &Game, x: &[Vec<f64>], u: &[f64]) -> (f64, f64) {
    let (mut residual, mut gap) = (0.0f64, 0.0);
    for (i, row) in x.iter().enumerate() {
        let best = (0..u.len())
            .map(|j| u[j] - game.net.cost(i, j))
            .fold(f64::NEG_INFINITY, f64::max);
        for (j, &flow) in row.iter().enumerate() {
            if flow > 0.0 {
                let loss = best - (u[j] - game.net.cost(i, j));
                residual = residual.max(loss);
                gap += flow * loss;
            }
        }
    }
    (residual, gap)
}

/// Maximizes the potential for the given price intercepts (`intercepts[0]`
/// is the shock node's posterior mean), starting from "everyone stays".
pub fn solve_potential(net: &Network, intercepts: &[f64]) -> Result<Equilibrium, EquilibriumError> {
    let n = net.len();
    if intercepts.len() != n {
        return Err(EquilibriumError::Dimension { expected: n, got: intercepts.len() });
    }
    let game = Game { net, s: intercepts, keep: 1.0 - net.commission() };
    let mut x = vec![vec![0.0; n]; n];
    for (i, row) in x.iter_mut().enumerate() {
        row[i] = net.nodes()[i].mass;
    }
    let mut q = column_sums(&x);
    let mut sweeps = 0;
    loop {
        let u = game.route_utilities(&q);
        let (residual, gap) = optimality(&game, &x, &u);
        let phi = potential(net, intercepts, &x);
        let scale = u
            .iter()
            .map(|v| v.abs())
            .chain(net.cost_matrix().iter().flatten().map(|c| c.abs()))
            .fold(1.0, f64::max);
        if residual <= 1e-11 * scale && gap <= 1e-10 * (1.0 + phi.abs()) {
            return Ok(Equilibrium { profile: StrategyProfile { x, q }, potential: phi, residual, gap, sweeps });
        }
        if sweeps >= MAX_SWEEPS {
            return Err(EquilibriumError::NonConvergence { iterations: sweeps, gap });
        }
        sweeps += 1;
        for i in 0..n {
            // Several pairwise moves per origin before moving on.
            for _ in 0..n {
                let util = |j: usize, q: &[f64]| game.price_utility(q, j) - net.cost(i, j);
                let mut best = 0;
                let mut worst = usize::MAX;
                for j in 0..n {
                    if util(j, &q) > util(best, &q) {
                        best = j;
                    }
                    if x[i][j] > 0.0 && (worst == usize::MAX || util(j, &q) < util(worst, &q)) {
                        worst = j;
                    }
                }
                if worst == usize::MAX || worst == best {
                    break;
                }
                let delta_u = util(best, &q) - util(worst, &q);
                if delta_u <= 0.0 {
                    break;
                }
                let curvature = game.keep * (net.nodes()[best].beta + net.nodes()[worst].beta);
                let available = x[i][worst];
                let mut step = if curvature > 0.0 { delta_u / curvature } else { available };
                if step >= available * (1.0 - 1e-14) {
                    step = available;
                }
                x[i][best] += step;
                q[best] += step;
                if step == available {
                    x[i][worst] = 0.0;
                } else {
                    x[i][worst] -= step;
                }
                q[worst] -= step;
            }
        }
        q = column_sums(&x);
    }
}
