//! Network and prior data model, assumption checkers and market-size
//! classification.

mod prior;

pub use prior::{Prior, PriorKind};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative tolerance for treating two shortest-path distances as equal.
pub const DISTANCE_TOL: f64 = 1e-9;
/// Absolute tolerance on prices used by the balance checks.
pub const BALANCE_TOL: f64 = 1e-7;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("node {node} is unreachable from the shock node")]
    DisconnectedGraph { node: usize },
    #[error("invalid network: {0}")]
    InvalidNetwork(String),
    #[error("invalid prior: {0}")]
    InvalidPrior(String),
    #[error("all nodes share one distance; no pair to compare")]
    NoPairs,
}

/// Per-node data. The shock node's `market_size` is only its base intercept
/// under scenario shocks; single-shock analyses use the posterior mean instead.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub mass: f64,
    pub beta: f64,
    pub market_size: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub cost: f64,
}

/// Undirected network with node 0 as the shock node.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    commission: f64,
    cost: Vec<Vec<f64>>,
}

fn all_pairs(n: usize, edges: &[Edge]) -> Vec<Vec<f64>> {
    let mut c = vec![vec![f64::INFINITY; n]; n];
    for (i, row) in c.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    for e in edges {
        if e.cost < c[e.u][e.v] {
            c[e.u][e.v] = e.cost;
            c[e.v][e.u] = e.cost;
        }
    }
    for k in 0..n {
        for i in 0..n {
            let cik = c[i][k];
            if cik.is_infinite() {
                continue;
            }
            for j in 0..n {
                let via = cik + c[k][j];
                if via < c[i][j] {
                    c[i][j] = via;
                }
            }
        }
    }
    c
}

impl Network {
    pub fn new(nodes: Vec<Node>, edges: Vec<Edge>, commission: f64) -> Result<Self, ModelError> {
        let bad = |msg: String| Err(ModelError::InvalidNetwork(msg));
        if nodes.is_empty() {
            return bad("no nodes".into());
        }
        if !(0.0..1.0).contains(&commission) {
            return bad(format!("commission {commission} outside [0, 1)"));
        }
        for (i, nd) in nodes.iter().enumerate() {
            if !(nd.mass >= 0.0 && nd.mass.is_finite()) {
                return bad(format!("node {i}: mass must be finite and nonnegative"));
            }
            if !(nd.beta >= 0.0 && nd.beta.is_finite()) {
                return bad(format!("node {i}: elasticity must be finite and nonnegative"));
            }
            if i > 0 && !(nd.market_size >= 0.0 && nd.market_size.is_finite()) {
                return bad(format!("node {i}: market size must be finite and nonnegative"));
            }
        }
        if !(nodes[0].beta > 0.0) {
            return bad("shock node needs strictly positive elasticity".into());
        }
        for e in &edges {
            if e.u >= nodes.len() || e.v >= nodes.len() {
                return bad(format!("edge ({}, {}) references a missing node", e.u, e.v));
            }
            if e.u == e.v {
                return bad(format!("self-loop at node {}", e.u));
            }
            if !(e.cost >= 0.0 && e.cost.is_finite()) {
                return bad(format!("edge ({}, {}) has invalid cost", e.u, e.v));
            }
        }
        let cost = all_pairs(nodes.len(), &edges);
        if let Some(node) = cost[0].iter().position(|c| c.is_infinite()) {
            return Err(ModelError::DisconnectedGraph { node });
        }
        Ok(Self { nodes, edges, commission, cost })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn commission(&self) -> f64 {
        self.commission
    }

    /// Shortest-path repositioning cost between two nodes.
    pub fn cost(&self, i: usize, j: usize) -> f64 {
        self.cost[i][j]
    }

    pub fn cost_matrix(&self) -> &[Vec<f64>] {
        &self.cost
    }

    /// Price intercepts with the shock node's intercept set to `s0`.
    pub fn intercepts(&self, s0: f64) -> Vec<f64> {
        let mut s: Vec<f64> = self.nodes.iter().map(|n| n.market_size).collect();
        s[0] = s0;
        s
    }

    pub fn with_commission(&self, commission: f64) -> Result<Self, ModelError> {
        Self::new(self.nodes.clone(), self.edges.clone(), commission)
    }

    pub fn with_nodes(&self, nodes: Vec<Node>) -> Result<Self, ModelError> {
        Self::new(nodes, self.edges.clone(), self.commission)
    }
}

/// Nodes sharing one distance to the shock node.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistanceGroup {
    pub distance: f64,
    pub nodes: Vec<usize>,
}

/// Distances to the shock node and the grouping of the other nodes by distance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistanceTable {
    pub d: Vec<f64>,
    pub groups: Vec<DistanceGroup>,
}

fn same_distance(a: f64, b: f64) -> bool {
    (a - b).abs() <= DISTANCE_TOL * a.abs().max(b.abs()).max(1.0)
}

pub fn shortest_distances(net: &Network) -> Result<DistanceTable, ModelError> {
    let d: Vec<f64> = (0..net.len()).map(|i| net.cost(0, i)).collect();
    if let Some(node) = d.iter().position(|x| x.is_infinite()) {
        return Err(ModelError::DisconnectedGraph { node });
    }
    let mut order: Vec<usize> = (1..net.len()).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]).then(a.cmp(&b)));
    let mut groups: Vec<DistanceGroup> = Vec::new();
    for i in order {
        match groups.last_mut() {
            Some(g) if same_distance(g.distance, d[i]) => g.nodes.push(i),
            _ => groups.push(DistanceGroup { distance: d[i], nodes: vec![i] }),
        }
    }
    Ok(DistanceTable { d, groups })
}

/// Price residuals `s_i - beta_i m_i` (prior mean for the shock node).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BalanceReport {
    pub holds: bool,
    pub residuals: Vec<f64>,
}

pub fn check_homogeneous_balance(net: &Network, prior: &Prior) -> BalanceReport {
    let residuals: Vec<f64> = net
        .nodes()
        .iter()
        .enumerate()
        .map(|(i, n)| {
            let s = if i == 0 { prior.mean() } else { n.market_size };
            s - n.beta * n.mass
        })
        .collect();
    let holds = residuals.iter().all(|r| r.abs() <= BALANCE_TOL);
    BalanceReport { holds, residuals }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Bound {
    Upper,
    Lower,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DepletionReport {
    pub holds: bool,
    pub upper_bound: f64,
    pub lower_bound: f64,
    /// `upper_bound - sup S0`; negative when violated.
    pub upper_slack: f64,
    /// `inf S0 - lower_bound`; negative when violated.
    pub lower_slack: f64,
    pub binding: Bound,
    /// Number of nearest nodes used by the lower bound.
    pub k_hat: usize,
}

/// Bounds on the support under which no node empties in equilibrium.
pub fn check_no_depletion(net: &Network, prior: &Prior) -> DepletionReport {
    let r = net.commission();
    let dist = shortest_distances(net).expect("networks are connected by construction");
    let upper_bound = (1..net.len())
        .map(|i| net.nodes()[i].market_size + dist.d[i] / (1.0 - r))
        .fold(f64::NEG_INFINITY, f64::max);

    let mut order: Vec<usize> = (1..net.len()).collect();
    order.sort_by(|&a, &b| dist.d[a].total_cmp(&dist.d[b]).then(a.cmp(&b)));
    let m0 = net.nodes()[0].mass;
    let (mut num, mut den) = (m0, 0.0);
    let mut lower_bound = f64::NEG_INFINITY;
    let mut k_hat = 0;
    let mut fallback = (f64::NEG_INFINITY, 0);
    for (k, &i) in order.iter().enumerate() {
        let nd = net.nodes()[i];
        if nd.beta <= 0.0 {
            // A perfectly elastic receiver absorbs everything: node 0 never empties.
            lower_bound = f64::NEG_INFINITY;
            k_hat = k + 1;
            break;
        }
        num += dist.d[i] / ((1.0 - r) * nd.beta);
        den += 1.0 / nd.beta;
        let s_hat = -num / den;
        let here = -dist.d[i] / (1.0 - r);
        let next = order.get(k + 1).map_or(f64::NEG_INFINITY, |&j| -dist.d[j] / (1.0 - r));
        if s_hat > fallback.0 {
            fallback = (s_hat, k + 1);
        }
        if here + 1e-12 >= s_hat && s_hat + 1e-12 >= next {
            lower_bound = s_hat;
            k_hat = k + 1;
            break;
        }
        if k + 1 == order.len() {
            (lower_bound, k_hat) = fallback;
        }
    }
    if order.is_empty() {
        // A lone shock node keeps its agents whatever happens.
        lower_bound = f64::NEG_INFINITY;
    }
    let upper_slack = upper_bound - prior.hi();
    let lower_slack = prior.lo() - lower_bound;
    let holds = upper_slack >= -BALANCE_TOL && lower_slack >= -BALANCE_TOL;
    let binding = if upper_slack <= lower_slack { Bound::Upper } else { Bound::Lower };
    DepletionReport { holds, upper_bound, lower_bound, upper_slack, lower_slack, binding, k_hat }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InitialBalanceReport {
    pub holds: bool,
    /// `(i, j, excess)`: agents at `j` gain `excess` by moving to `i`.
    pub violation: Option<(usize, usize, f64)>,
}

/// No agent gains from moving when everyone sits at the initial distribution.
pub fn check_initial_balance(net: &Network, prior: &Prior) -> InitialBalanceReport {
    let r = net.commission();
    let price: Vec<f64> = net
        .nodes()
        .iter()
        .enumerate()
        .map(|(i, n)| {
            let s = if i == 0 { prior.mean() } else { n.market_size };
            (1.0 - r) * (s - n.beta * n.mass)
        })
        .collect();
    let mut worst: Option<(usize, usize, f64)> = None;
    for i in 1..net.len() {
        for j in 0..net.len() {
            if i == j {
                continue;
            }
            let c = net.cost(i, j);
            for (a, b) in [(i, j), (j, i)] {
                let excess = price[a] - price[b] - c;
                if excess > BALANCE_TOL && worst.is_none_or(|w| excess > w.2 + 1e-15) {
                    worst = Some((a, b, excess));
                }
            }
        }
    }
    InitialBalanceReport { holds: worst.is_none(), violation: worst }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SizeTrend {
    Similar,
    Increasing,
    Decreasing,
    Mixed,
}

/// Classification of one pair of adjacent distance groups.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupPair {
    pub d_near: f64,
    pub d_far: f64,
    pub trend: SizeTrend,
    pub min_ratio: f64,
    pub max_ratio: f64,
}

/// Overall shape of market sizes along distance from the shock node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "shape", rename_all = "lowercase")]
pub enum SizePattern {
    /// Every adjacent pair is similar.
    Similar,
    /// Similar pairs, then one monotone run over `[d_lo, d_hi]`, then similar pairs.
    Transition { trend: SizeTrend, d_lo: f64, d_hi: f64 },
    Mixed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarketClass {
    pub threshold: f64,
    pub pairs: Vec<GroupPair>,
    pub pattern: SizePattern,
}

impl MarketClass {
    pub fn all_similar(&self) -> bool {
        matches!(self.pattern, SizePattern::Similar)
    }
}

/// Market size used for the shock node: `beta_0 m_0`, its prior mean under balance.
fn sizes_with_shock(net: &Network) -> Vec<f64> {
    let mut s = net.intercepts(0.0);
    s[0] = net.nodes()[0].beta * net.nodes()[0].mass;
    s
}

fn classify_ratio(ratio: f64, threshold: f64) -> SizeTrend {
    let tol = 1e-12 * threshold.max(1.0);
    if ratio > threshold + tol {
        SizeTrend::Increasing
    } else if ratio < -threshold - tol {
        SizeTrend::Decreasing
    } else {
        SizeTrend::Similar
    }
}

/// Compares market-size change rates between adjacent distance groups (the
/// shock node is the group at distance 0) against `1/(1-r)`.
pub fn classify_market_sizes(net: &Network, dist: &DistanceTable) -> MarketClass {
    let threshold = 1.0 / (1.0 - net.commission());
    let s = sizes_with_shock(net);
    let mut groups = vec![DistanceGroup { distance: 0.0, nodes: vec![0] }];
    for g in &dist.groups {
        if same_distance(g.distance, 0.0) {
            groups[0].nodes.extend(g.nodes.iter().copied());
        } else {
            groups.push(g.clone());
        }
    }
    let mut pairs = Vec::new();
    for w in groups.windows(2) {
        let (near, far) = (&w[0], &w[1]);
        let mut trends = Vec::new();
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &i in &far.nodes {
            for &j in &near.nodes {
                let ratio = (s[i] - s[j]) / (dist.d[i] - dist.d[j]);
                lo = lo.min(ratio);
                hi = hi.max(ratio);
                trends.push(classify_ratio(ratio, threshold));
            }
        }
        let trend = if trends.iter().all(|t| *t == trends[0]) { trends[0] } else { SizeTrend::Mixed };
        pairs.push(GroupPair { d_near: near.distance, d_far: far.distance, trend, min_ratio: lo, max_ratio: hi });
    }
    let pattern = size_pattern(&pairs);
    MarketClass { threshold, pairs, pattern }
}

fn size_pattern(pairs: &[GroupPair]) -> SizePattern {
    let first = pairs.iter().position(|p| p.trend != SizeTrend::Similar);
    let Some(first) = first else {
        return SizePattern::Similar;
    };
    let last = pairs.iter().rposition(|p| p.trend != SizeTrend::Similar).unwrap_or(first);
    let trend = pairs[first].trend;
    let monotone = matches!(trend, SizeTrend::Increasing | SizeTrend::Decreasing);
    if monotone && pairs[first..=last].iter().all(|p| p.trend == trend) {
        SizePattern::Transition { trend, d_lo: pairs[first].d_near, d_hi: pairs[last].d_far }
    } else {
        SizePattern::Mixed
    }
}

/// Commission above which every pair of nodes has similar market sizes.
/// Returns `-inf` when no pair has distinct market sizes.
pub fn r_bar(net: &Network, dist: &DistanceTable) -> Result<f64, ModelError> {
    let s = sizes_with_shock(net);
    let mut any_pair = false;
    let mut min_ratio = f64::INFINITY;
    for i in 0..net.len() {
        for j in (i + 1)..net.len() {
            if same_distance(dist.d[i], dist.d[j]) {
                continue;
            }
            any_pair = true;
            let ds = s[i] - s[j];
            if ds != 0.0 {
                min_ratio = min_ratio.min(((dist.d[i] - dist.d[j]) / ds).abs());
            }
        }
    }
    if !any_pair {
        return Err(ModelError::NoPairs);
    }
    Ok(1.0 - min_ratio)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn line3(m: [f64; 3], s: [f64; 2], r: f64) -> Network {
        let nodes = vec![
            Node { mass: m[0], beta: 1.0, market_size: 0.0 },
            Node { mass: m[1], beta: 1.0, market_size: s[0] },
            Node { mass: m[2], beta: 1.0, market_size: s[1] },
        ];
        let edges = vec![Edge { u: 0, v: 1, cost: 1.0 }, Edge { u: 1, v: 2, cost: 1.0 }];
        Network::new(nodes, edges, r).unwrap()
    }

    fn node(mass: f64, s: f64) -> Node {
        Node { mass, beta: 1.0, market_size: s }
    }

    #[test]
    fn distances_on_small_graphs() {
        let net = line3([2.0; 3], [2.0, 2.0], 0.5);
        let d = shortest_distances(&net).unwrap();
        assert_eq!(d.d, vec![0.0, 1.0, 2.0]);
        assert_eq!(d.groups.len(), 2);

        let tri = Network::new(
            vec![node(1.0, 0.0), node(1.0, 1.0), node(1.0, 1.0)],
            vec![Edge { u: 0, v: 1, cost: 5.0 }, Edge { u: 0, v: 2, cost: 1.0 }, Edge { u: 1, v: 2, cost: 1.0 }],
            0.5,
        )
        .unwrap();
        assert_eq!(shortest_distances(&tri).unwrap().d[1], 2.0);

        let star = Network::new(
            vec![node(1.0, 0.0), node(1.0, 1.0), node(1.0, 1.0), node(1.0, 1.0)],
            (1..4).map(|v| Edge { u: 0, v, cost: 3.0 }).collect(),
            0.5,
        )
        .unwrap();
        let d = shortest_distances(&star).unwrap();
        assert_eq!(d.groups, vec![DistanceGroup { distance: 3.0, nodes: vec![1, 2, 3] }]);
    }

    #[test]
    fn disconnected_and_invalid_networks_are_rejected() {
        let err = Network::new(vec![node(1.0, 0.0), node(1.0, 1.0)], vec![], 0.5).unwrap_err();
        assert_eq!(err, ModelError::DisconnectedGraph { node: 1 });
        let one = vec![node(1.0, 0.0), node(1.0, 1.0)];
        let e = vec![Edge { u: 0, v: 1, cost: 1.0 }];
        assert!(Network::new(one.clone(), e.clone(), 1.0).is_err());
        let mut flat = one;
        flat[0].beta = 0.0;
        assert!(Network::new(flat, e, 0.5).is_err());
    }

    #[test]
    fn homogeneous_balance_examples() {
        let prior = Prior::uniform(-2.0, 6.0).unwrap();
        assert!(check_homogeneous_balance(&line3([2.0; 3], [2.0, 2.0], 0.5), &prior).holds);
        let off = check_homogeneous_balance(&line3([3.0, 2.0, 2.0], [2.0, 2.0], 0.5), &prior);
        assert!(!off.holds);
        assert_eq!(off.residuals[0], -1.0);
        let dec = line3([4.0, 8.0, 2.0], [8.0, 2.0], 0.5);
        assert!(check_homogeneous_balance(&dec, &Prior::uniform(-2.0, 10.0).unwrap()).holds);
    }

    #[test]
    fn depletion_bounds() {
        let net = line3([2.0; 3], [2.0, 2.0], 0.5);
        let rep = check_no_depletion(&net, &Prior::uniform(-2.0, 6.0).unwrap());
        assert!(rep.holds);
        assert_eq!(rep.upper_bound, 6.0);
        assert_eq!(rep.binding, Bound::Upper);
        assert_eq!(rep.lower_bound, -4.0);
        assert!(!check_no_depletion(&net, &Prior::uniform(-2.0, 7.0).unwrap()).holds);

        let dec = line3([4.0, 8.0, 2.0], [8.0, 2.0], 0.5);
        let rep = check_no_depletion(&dec, &Prior::uniform(-2.0, 10.0).unwrap());
        assert!(rep.holds);
        assert_eq!(rep.upper_bound, 10.0);
        assert_eq!((rep.lower_bound, rep.k_hat), (-5.0, 2));
    }

    #[test]
    fn initial_balance_examples() {
        let prior = Prior::uniform(-2.0, 6.0).unwrap();
        assert!(check_initial_balance(&line3([2.0; 3], [2.0, 2.0], 0.5), &prior).holds);

        // (1-r)(s1 - m1) = 10 against a balanced shock node one unit away.
        let two = Network::new(
            vec![node(2.0, 0.0), Node { mass: 0.0, beta: 1.0, market_size: 20.0 }],
            vec![Edge { u: 0, v: 1, cost: 1.0 }],
            0.5,
        )
        .unwrap();
        let rep = check_initial_balance(&two, &Prior::uniform(0.0, 4.0).unwrap());
        assert!(!rep.holds);
        let (i, j, _) = rep.violation.unwrap();
        assert_eq!((i, j), (1, 0));

        // Small price gaps against large moving costs.
        let slack = Network::new(
            vec![node(2.0, 0.0), node(1.0, 1.1), node(1.0, 0.9)],
            vec![Edge { u: 0, v: 1, cost: 5.0 }, Edge { u: 1, v: 2, cost: 5.0 }],
            0.5,
        )
        .unwrap();
        assert!(check_initial_balance(&slack, &Prior::uniform(1.0, 3.0).unwrap()).holds);
    }

    #[test]
    fn classification_examples() {
        let flat = line3([2.0; 3], [2.0, 2.0], 0.5);
        let c = classify_market_sizes(&flat, &shortest_distances(&flat).unwrap());
        assert_eq!(c.pattern, SizePattern::Similar);

        let dec = line3([4.0, 8.0, 2.0], [8.0, 2.0], 0.5);
        let c = classify_market_sizes(&dec, &shortest_distances(&dec).unwrap());
        assert_eq!(c.pairs[1].trend, SizeTrend::Decreasing);
        assert_eq!(c.pairs[1].min_ratio, -6.0);
        // The shock node (size 4) against node 1 (size 8) is increasing.
        assert_eq!(c.pairs[0].trend, SizeTrend::Increasing);
        assert_eq!(c.pattern, SizePattern::Mixed);

        let inc = line3([4.0, 2.0, 8.0], [2.0, 8.0], 0.5);
        let c = classify_market_sizes(&inc, &shortest_distances(&inc).unwrap());
        assert_eq!(c.pairs[1].trend, SizeTrend::Increasing);
        // Ratio -2 sits exactly on the threshold and counts as similar.
        assert_eq!(c.pairs[0].trend, SizeTrend::Similar);
        assert_eq!(
            c.pattern,
            SizePattern::Transition { trend: SizeTrend::Increasing, d_lo: 1.0, d_hi: 2.0 }
        );
    }

    #[test]
    fn r_bar_examples() {
        let dec = line3([4.0, 8.0, 2.0], [8.0, 2.0], 0.5);
        let d = shortest_distances(&dec).unwrap();
        assert!((r_bar(&dec, &d).unwrap() - 5.0 / 6.0).abs() < 1e-15);

        let flat = line3([2.0; 3], [2.0, 2.0], 0.5);
        assert_eq!(r_bar(&flat, &shortest_distances(&flat).unwrap()).unwrap(), f64::NEG_INFINITY);

        // Groups at distances 1, 2, 3 with |dd/ds| = 1/4 and 1/2 between
        // neighbours; every other pair is flatter.
        let nodes = vec![node(1.0, 0.0), node(1.0, 1.0), node(1.0, 5.0), node(1.0, 7.0)];
        let edges = (0..3).map(|u| Edge { u, v: u + 1, cost: 1.0 }).collect();
        let net = Network::new(nodes, edges, 0.5).unwrap();
        let d = shortest_distances(&net).unwrap();
        // Shock node at size 1: pairs with node 1 have ds = 0 and are skipped.
        assert!((r_bar(&net, &d).unwrap() - 0.75).abs() < 1e-15);

        let lone = Network::new(vec![node(1.0, 0.0)], vec![], 0.5).unwrap();
        assert_eq!(r_bar(&lone, &shortest_distances(&lone).unwrap()), Err(ModelError::NoPairs));
    }
}
