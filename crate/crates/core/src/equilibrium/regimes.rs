//! Equilibrium regimes: intervals of the shock node's posterior mean on which
//! the set of moving nodes, and hence the revenue slope, stays fixed.
//!
//! Above the prior mean, agents flow into node 0 from a growing set of nodes,
//! some of which may empty completely. Below it, agents leave node 0 for a
//! growing set of receivers until node 0 itself may empty. Within a regime,
//! every active node's price sits exactly one moving cost (scaled by
//! `1/(1-r)`) away from node 0's price, which gives linear closed forms.

use serde::Serialize;

use super::potential::solve_potential;
use super::EquilibriumError;
use crate::model::{
    check_homogeneous_balance, check_initial_balance, check_no_depletion, classify_market_sizes,
    shortest_distances, MarketClass, Network, Prior,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RegimeKind {
    /// Nobody moves.
    Idle,
    /// Agents move into the shock node.
    Inflow,
    /// Agents leave the shock node.
    Outflow,
    /// The shock node has emptied; the allocation is frozen.
    Drained,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Regime {
    pub index: i32,
    pub kind: RegimeKind,
    pub start: f64,
    pub end: f64,
    /// Nodes sending agents to the shock node.
    pub movers: Vec<usize>,
    /// Movers that have emptied.
    pub depleted: Vec<usize>,
    /// Nodes receiving agents from the shock node.
    pub receivers: Vec<usize>,
    pub slope: f64,
    pub value_start: f64,
    pub value_end: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct Snapshot {
    s: Vec<f64>,
    beta: Vec<f64>,
    mass: Vec<f64>,
    d: Vec<f64>,
    r: f64,
}

/// Ordered regimes covering the prior support, with revenue values chained
/// from the no-information equilibrium at the prior mean.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeTable {
    regimes: Vec<Regime>,
    positive: usize,
    negative: usize,
    anchor: f64,
    anchor_value: f64,
    market: MarketClass,
    #[serde(skip)]
    snap: Snapshot,
}

/// Linear relations shared by inflow and outflow regimes: active node `i`
/// holds `q_i = (c_i - p0) / beta_i` with `c_i = s_i ± d_i/(1-r)`.
struct Flow<'a> {
    snap: &'a Snapshot,
    sign: f64,
    active: Vec<usize>,
    total: f64,
}

impl Flow<'_> {
    fn offset(&self, i: usize) -> f64 {
        self.snap.s[i] + self.sign * self.snap.d[i] / (1.0 - self.snap.r)
    }

    fn inv_beta_sum(&self) -> f64 {
        self.active.iter().map(|&i| 1.0 / self.snap.beta[i]).sum()
    }

    fn weighted_offsets(&self) -> f64 {
        self.active.iter().map(|&i| self.offset(i) / self.snap.beta[i]).sum()
    }

    fn state_at_price(&self, p0: f64) -> f64 {
        let b0 = self.snap.beta[0];
        p0 * (1.0 + b0 * self.inv_beta_sum()) + b0 * (self.total - self.weighted_offsets())
    }

    fn price_at_state(&self, s0: f64) -> f64 {
        let b0 = self.snap.beta[0];
        (s0 - b0 * (self.total - self.weighted_offsets())) / (1.0 + b0 * self.inv_beta_sum())
    }

    /// Node-0 price at which the shock node empties.
    fn drain_price(&self) -> Option<f64> {
        let b = self.inv_beta_sum();
        (b > 0.0).then(|| (self.weighted_offsets() - self.total) / b)
    }

    fn slope(&self) -> f64 {
        let snap = self.snap;
        let keep = 1.0 - snap.r;
        let pull: f64 = self.active.iter().map(|&i| snap.d[i] / (keep * snap.beta[i])).sum();
        snap.r * (self.total + self.sign * pull) / (1.0 + snap.beta[0] * self.inv_beta_sum())
    }

    fn fill(&self, p0: f64, q: &mut [f64]) {
        let mut held = 0.0;
        for &i in &self.active {
            q[i] = (self.offset(i) - p0) / self.snap.beta[i];
            held += q[i];
        }
        q[0] = self.total - held;
    }
}

impl RegimeTable {
    pub fn regimes(&self) -> &[Regime] {
        &self.regimes
    }

    /// Number of regimes above regime 0 inside the support.
    pub fn positive_count(&self) -> usize {
        self.positive
    }

    /// Number of regimes below regime 0 inside the support.
    pub fn negative_count(&self) -> usize {
        self.negative
    }

    pub fn lo(&self) -> f64 {
        self.regimes[0].start
    }

    pub fn hi(&self) -> f64 {
        self.regimes[self.regimes.len() - 1].end
    }

    pub fn commission(&self) -> f64 {
        self.snap.r
    }

    pub fn anchor(&self) -> (f64, f64) {
        (self.anchor, self.anchor_value)
    }

    pub fn market_class(&self) -> &MarketClass {
        &self.market
    }

    /// Interior thresholds in increasing order.
    pub fn thresholds(&self) -> Vec<f64> {
        self.regimes.iter().skip(1).map(|g| g.start).collect()
    }

    pub fn slopes(&self) -> Vec<f64> {
        self.regimes.iter().map(|g| g.slope).collect()
    }

    pub fn regime(&self, index: i32) -> Option<&Regime> {
        self.regimes.iter().find(|g| g.index == index)
    }

    /// Regime containing `s0`; thresholds belong to the higher regime.
    pub fn regime_at(&self, s0: f64) -> &Regime {
        let k = self.regimes.partition_point(|g| g.start <= s0);
        &self.regimes[k.saturating_sub(1)]
    }

    fn flow(&self, g: &Regime) -> Flow<'_> {
        let snap = &self.snap;
        match g.kind {
            RegimeKind::Idle => Flow { snap, sign: 1.0, active: vec![], total: snap.mass[0] },
            RegimeKind::Inflow => Flow {
                snap,
                sign: 1.0,
                active: g.movers.iter().copied().filter(|i| !g.depleted.contains(i)).collect(),
                total: snap.mass[0] + g.movers.iter().map(|&i| snap.mass[i]).sum::<f64>(),
            },
            RegimeKind::Outflow | RegimeKind::Drained => Flow {
                snap,
                sign: -1.0,
                active: g.receivers.clone(),
                total: snap.mass[0] + g.receivers.iter().map(|&i| snap.mass[i]).sum::<f64>(),
            },
        }
    }

    /// Closed-form equilibrium distribution at posterior mean `s0`.
    pub fn allocation(&self, s0: f64) -> Vec<f64> {
        let g = self.regime_at(s0);
        let mut q = self.snap.mass.clone();
        let flow = self.flow(g);
        match g.kind {
            RegimeKind::Idle => {}
            RegimeKind::Inflow | RegimeKind::Outflow => {
                flow.fill(flow.price_at_state(s0), &mut q);
                for &i in &g.depleted {
                    q[i] = 0.0;
                }
            }
            RegimeKind::Drained => {
                let p = flow.drain_price().unwrap_or(s0);
                flow.fill(p, &mut q);
                q[0] = 0.0;
            }
        }
        q
    }

    /// Closed-form revenue `r Σ (s_i - beta_i q_i) q_i` at `s0`.
    pub fn revenue_at(&self, s0: f64) -> f64 {
        let q = self.allocation(s0);
        let snap = &self.snap;
        let mut total = 0.0;
        for (i, &qi) in q.iter().enumerate() {
            let s = if i == 0 { s0 } else { snap.s[i] };
            total += (s - snap.beta[i] * qi) * qi;
        }
        snap.r * total
    }

    /// Revenue chained through the table's slopes.
    pub fn value_at(&self, s0: f64) -> f64 {
        let g = self.regime_at(s0);
        g.value_start + g.slope * (s0 - g.start)
    }

    /// CSV with columns `k, s0_k, slope_k, R_k, affected_set`; `s0_k` is the
    /// regime's lower end and `R_k` the revenue there.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,s0_k,slope_k,R_k,affected_set\n");
        for g in &self.regimes {
            let set = |v: &[usize]| v.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(" ");
            let affected = match g.kind {
                RegimeKind::Idle => String::new(),
                RegimeKind::Inflow if g.depleted.is_empty() => format!("in:{}", set(&g.movers)),
                RegimeKind::Inflow => format!("in:{} out:{}", set(&g.movers), set(&g.depleted)),
                RegimeKind::Outflow => format!("to:{}", set(&g.receivers)),
                RegimeKind::Drained => format!("to:{} empty:0", set(&g.receivers)),
            };
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                g.index,
                crate::fmt_sig(g.start),
                crate::fmt_sig(g.slope),
                crate::fmt_sig(g.value_start),
                affected
            ));
        }
        out
    }
}

fn snapshot(net: &Network) -> Result<(Snapshot, MarketClass), EquilibriumError> {
    let dist = shortest_distances(net)?;
    let nodes = net.nodes();
    if let Some(node) = nodes.iter().position(|n| n.beta <= 0.0) {
        return Err(EquilibriumError::ZeroElasticity { node });
    }
    let market = classify_market_sizes(net, &dist);
    let snap = Snapshot {
        s: net.intercepts(0.0),
        beta: nodes.iter().map(|n| n.beta).collect(),
        mass: nodes.iter().map(|n| n.mass).collect(),
        d: dist.d,
        r: net.commission(),
    };
    Ok((snap, market))
}

fn edge_tol(lo: f64, hi: f64) -> f64 {
    1e-12 * (hi - lo).abs().max(hi.abs()).max(lo.abs()).max(1.0)
}

/// Pushes a regime, replacing the previous one if it would have zero width.
fn push_regime(list: &mut Vec<Regime>, g: Regime, tol: f64) {
    if let Some(last) = list.last() {
        if (last.start - g.start).abs() <= tol {
            list.pop();
        }
    }
    list.push(g);
}

fn idle_regime(snap: &Snapshot) -> Regime {
    Regime {
        index: 0,
        kind: RegimeKind::Idle,
        start: f64::NEG_INFINITY,
        end: f64::INFINITY,
        movers: vec![],
        depleted: vec![],
        receivers: vec![],
        slope: snap.r * snap.mass[0],
        value_start: 0.0,
        value_end: 0.0,
    }
}

/// Chains values from the anchor and sets start/end on the ordered list
/// `negatives(reversed) + [idle] + positives`.
fn assemble(
    snap: Snapshot,
    market: MarketClass,
    mut below: Vec<Regime>,
    above: Vec<Regime>,
    prior: &Prior,
    anchor_value: f64,
) -> RegimeTable {
    let (lo, hi) = (prior.lo(), prior.hi());
    let negative = below.len();
    let positive = above.len();
    // `below` holds regimes outward from 0 with `start` meaning the outer
    // threshold, i.e. their upper end; flip into increasing order.
    below.reverse();
    let mut regimes: Vec<Regime> = Vec::with_capacity(negative + positive + 1);
    for (k, mut g) in below.into_iter().enumerate() {
        g.index = -((negative - k) as i32);
        regimes.push(g);
    }
    regimes.push(idle_regime(&snap));
    for (k, mut g) in above.into_iter().enumerate() {
        g.index = (k + 1) as i32;
        regimes.push(g);
    }
    // Negative regimes were recorded by upper end; convert to [start, end).
    let uppers: Vec<f64> = regimes[..negative].iter().map(|g| g.start).collect();
    for k in 0..regimes.len() {
        let start = if k == 0 {
            lo
        } else if k <= negative {
            uppers[k - 1]
        } else {
            regimes[k].start
        };
        regimes[k].start = start;
    }
    for k in 0..regimes.len() {
        regimes[k].end = if k + 1 < regimes.len() { regimes[k + 1].start } else { hi };
    }
    let anchor = prior.mean();
    let home = regimes.partition_point(|g| g.start <= anchor).saturating_sub(1);
    {
        let g = &mut regimes[home];
        g.value_start = anchor_value - g.slope * (anchor - g.start);
        g.value_end = anchor_value + g.slope * (g.end - anchor);
    }
    for k in (home + 1)..regimes.len() {
        let v = regimes[k - 1].value_end;
        let g = &mut regimes[k];
        g.value_start = v;
        g.value_end = v + g.slope * (g.end - g.start);
    }
    for k in (0..home).rev() {
        let v = regimes[k + 1].value_start;
        let g = &mut regimes[k];
        g.value_end = v;
        g.value_start = v - g.slope * (g.end - g.start);
    }
    RegimeTable { regimes, positive, negative, anchor, anchor_value, market, snap }
}

fn no_information_revenue(net: &Network, prior: &Prior) -> Result<f64, EquilibriumError> {
    let s = net.intercepts(prior.mean());
    let eq = solve_potential(net, &s)?;
    Ok(super::potential::revenue(net, &s, &eq.profile.q))
}

/// Regimes from distance-group closed forms; requires every node to be
/// balanced at the prior mean and no node to empty over the support.
pub fn regimes_simple(net: &Network, prior: &Prior) -> Result<RegimeTable, EquilibriumError> {
    let balance = check_homogeneous_balance(net, prior);
    if !balance.holds {
        return Err(EquilibriumError::AssumptionViolated(format!(
            "prices are not balanced at the prior mean (residuals {:?})",
            balance.residuals
        )));
    }
    let depletion = check_no_depletion(net, prior);
    if !depletion.holds {
        return Err(EquilibriumError::AssumptionViolated(format!(
            "support [{}, {}] allows depletion (bounds [{}, {}])",
            prior.lo(),
            prior.hi(),
            depletion.lower_bound,
            depletion.upper_bound
        )));
    }
    let (snap, market) = snapshot(net)?;
    let dist = shortest_distances(net)?;
    let keep = 1.0 - snap.r;
    let (m0, b0) = (snap.mass[0], snap.beta[0]);
    let tol = edge_tol(prior.lo(), prior.hi());

    let mut above = Vec::new();
    let mut below = Vec::new();
    let mut members: Vec<usize> = Vec::new();
    let (mut up_mass, mut down_mass, mut inv_beta) = (m0, m0, 1.0 / b0);
    for (k, group) in dist.groups.iter().enumerate() {
        let dk = group.distance;
        // Mass pulled from closer groups when the next group starts moving.
        let beta = &snap.beta;
        let lag: f64 = dist.groups[..k]
            .iter()
            .flat_map(|g| g.nodes.iter().map(move |&i| (dk - g.distance) / (keep * beta[i])))
            .sum();
        let up_start = dk / keep + b0 * (m0 + lag);
        let down_start = -dk / keep + b0 * (m0 - lag);
        members.extend(group.nodes.iter().copied());
        for &i in &group.nodes {
            up_mass += snap.mass[i] + dk / (keep * snap.beta[i]);
            down_mass += snap.mass[i] - dk / (keep * snap.beta[i]);
            inv_beta += 1.0 / snap.beta[i];
        }
        let blank = |kind, start, slope| Regime {
            index: 0,
            kind,
            start,
            end: start,
            movers: vec![],
            depleted: vec![],
            receivers: vec![],
            slope,
            value_start: 0.0,
            value_end: 0.0,
        };
        if up_start < prior.hi() - tol && above.len() == k {
            let mut g = blank(RegimeKind::Inflow, up_start, snap.r * up_mass / (b0 * inv_beta));
            g.movers = members.clone();
            above.push(g);
        }
        if down_start > prior.lo() + tol && below.len() == k {
            let mut g = blank(RegimeKind::Outflow, down_start, snap.r * down_mass / (b0 * inv_beta));
            g.receivers = members.clone();
            below.push(g);
        }
    }
    let anchor_value = no_information_revenue(net, prior)?;
    Ok(assemble(snap, market, below, above, prior, anchor_value))
}

/// Regimes by event tracking, allowing nodes (including the shock node) to
/// empty. Requires that nobody gains from moving at the prior mean.
pub fn regimes_general(net: &Network, prior: &Prior) -> Result<RegimeTable, EquilibriumError> {
    let balance = check_initial_balance(net, prior);
    if let Some((i, j, excess)) = balance.violation {
        return Err(EquilibriumError::AssumptionViolated(format!(
            "agents at node {j} gain {excess} by moving to node {i} at the prior mean"
        )));
    }
    let (snap, market) = snapshot(net)?;
    let n = snap.s.len();
    let keep = 1.0 - snap.r;
    let tol = edge_tol(prior.lo(), prior.hi());
    let tie = |v: f64| 1e-12 * v.abs().max(1.0);
    let join_up = |i: usize| keep * (snap.s[i] - snap.beta[i] * snap.mass[i]) + snap.d[i];
    let empty_up = |i: usize| keep * snap.s[i] + snap.d[i];
    let join_down = |i: usize| keep * (snap.s[i] - snap.beta[i] * snap.mass[i]) - snap.d[i];

    // Inflow side: thresholds in increasing order.
    let mut above: Vec<Regime> = Vec::new();
    let (mut moving, mut empty) = (vec![false; n], vec![false; n]);
    let (mut movers, mut depleted): (Vec<usize>, Vec<usize>) = (vec![], vec![]);
    for _ in 0..=2 * n {
        let mut next = f64::INFINITY;
        for i in 1..n {
            let t = if !moving[i] {
                join_up(i)
            } else if !empty[i] {
                empty_up(i)
            } else {
                continue;
            };
            next = next.min(t);
        }
        if next.is_infinite() {
            break;
        }
        let flow = Flow {
            snap: &snap,
            sign: 1.0,
            active: movers.iter().copied().filter(|i| !empty[*i]).collect(),
            total: snap.mass[0] + movers.iter().map(|&i| snap.mass[i]).sum::<f64>(),
        };
        let start = flow.state_at_price(next / keep);
        if start >= prior.hi() - tol {
            break;
        }
        loop {
            let mut changed = false;
            for i in 1..n {
                if !moving[i] && join_up(i) <= next + tie(next) {
                    moving[i] = true;
                    movers.push(i);
                    changed = true;
                }
                if moving[i] && !empty[i] && empty_up(i) <= next + tie(next) {
                    empty[i] = true;
                    depleted.push(i);
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        let mut g = idle_regime(&snap);
        g.kind = RegimeKind::Inflow;
        g.start = start;
        g.movers = sorted(&movers);
        g.depleted = sorted(&depleted);
        g.slope = {
            let flow = Flow {
                snap: &snap,
                sign: 1.0,
                active: movers.iter().copied().filter(|i| !empty[*i]).collect(),
                total: snap.mass[0] + movers.iter().map(|&i| snap.mass[i]).sum::<f64>(),
            };
            flow.slope()
        };
        push_regime(&mut above, g, tol);
    }

    // Outflow side: thresholds in decreasing order, stored by upper end.
    let mut below: Vec<Regime> = Vec::new();
    let mut joined = vec![false; n];
    let mut receivers: Vec<usize> = vec![];
    if snap.mass[0] > 0.0 {
        for _ in 0..=n {
            let flow = Flow {
                snap: &snap,
                sign: -1.0,
                active: receivers.clone(),
                total: snap.mass[0] + receivers.iter().map(|&i| snap.mass[i]).sum::<f64>(),
            };
            let next_join = (1..n).filter(|&i| !joined[i]).map(join_down).fold(f64::NEG_INFINITY, f64::max);
            let drain = flow.drain_price().unwrap_or(f64::NEG_INFINITY);
            if drain > f64::NEG_INFINITY && drain >= next_join / keep - tie(drain) {
                // The shock node empties before anyone else joins.
                if drain <= prior.lo() + tol {
                    break;
                }
                let mut g = idle_regime(&snap);
                g.kind = RegimeKind::Drained;
                g.start = drain;
                g.receivers = sorted(&receivers);
                g.slope = 0.0;
                push_regime(&mut below, g, tol);
                break;
            }
            if next_join.is_infinite() {
                break;
            }
            let start = flow.state_at_price(next_join / keep);
            if start <= prior.lo() + tol {
                break;
            }
            for i in 1..n {
                if !joined[i] && join_down(i) >= next_join - tie(next_join) {
                    joined[i] = true;
                    receivers.push(i);
                }
            }
            let flow = Flow {
                snap: &snap,
                sign: -1.0,
                active: receivers.clone(),
                total: snap.mass[0] + receivers.iter().map(|&i| snap.mass[i]).sum::<f64>(),
            };
            let mut g = idle_regime(&snap);
            g.kind = RegimeKind::Outflow;
            g.start = start;
            g.receivers = sorted(&receivers);
            g.slope = flow.slope();
            push_regime(&mut below, g, tol);
        }
    }
    let anchor_value = no_information_revenue(net, prior)?;
    Ok(assemble(snap, market, below, above, prior, anchor_value))
}

fn sorted(v: &[usize]) -> Vec<usize> {
    let mut v = v.to_vec();
    v.sort_unstable();
    v
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegularityReport {
    pub holds: bool,
    pub colinear: Option<[(f64, f64); 3]>,
}

/// Fails when any three of the given points lie on one line (relative tolerance 1e-9).
pub fn check_regularity_points(points: &[(f64, f64)]) -> RegularityReport {
    let n = points.len();
    for a in 0..n {
        for b in (a + 1)..n {
            for c in (b + 1)..n {
                let (p, q, s) = (points[a], points[b], points[c]);
                let lhs = (q.0 - p.0) * (s.1 - p.1);
                let rhs = (s.0 - p.0) * (q.1 - p.1);
                if (lhs - rhs).abs() <= 1e-9 * (lhs.abs() + rhs.abs()) {
                    return RegularityReport { holds: false, colinear: Some([p, q, s]) };
                }
            }
        }
    }
    RegularityReport { holds: true, colinear: None }
}

/// Regularity of the threshold points `(s0[k], R(s0[k]))`, support ends included.
pub fn check_regularity(table: &RegimeTable) -> RegularityReport {
    let mut points: Vec<(f64, f64)> = table.regimes().iter().map(|g| (g.start, g.value_start)).collect();
    let last = &table.regimes()[table.regimes().len() - 1];
    points.push((last.end, last.value_end));
    check_regularity_points(&points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::{revenue, solve_potential};
    use crate::model::{Edge, Node};

    fn line(m: &[f64], s: &[f64], r: f64) -> Network {
        let nodes: Vec<Node> = m
            .iter()
            .enumerate()
            .map(|(i, &mass)| Node { mass, beta: 1.0, market_size: if i == 0 { 0.0 } else { s[i - 1] } })
            .collect();
        let edges = (1..m.len()).map(|i| Edge { u: i - 1, v: i, cost: 1.0 }).collect();
        Network::new(nodes, edges, r).unwrap()
    }

    fn assert_close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len(), "{a:?} vs {b:?}");
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol, "{a:?} vs {b:?}");
        }
    }

    fn matches_solver(net: &Network, table: &RegimeTable, lo: f64, hi: f64) {
        for k in 0..=200 {
            let s0 = lo + (hi - lo) * k as f64 / 200.0;
            let s = net.intercepts(s0);
            let eq = solve_potential(net, &s).unwrap();
            assert_close(&table.allocation(s0), &eq.profile.q, 1e-7);
            let direct = revenue(net, &s, &eq.profile.q);
            assert!((table.value_at(s0) - direct).abs() <= 1e-7 * direct.abs().max(1.0), "s0={s0}");
            assert!((table.revenue_at(s0) - direct).abs() <= 1e-7 * direct.abs().max(1.0));
        }
    }

    #[test]
    fn line3_thresholds_and_slopes() {
        let net = line(&[2.0, 2.0, 2.0], &[2.0, 2.0], 0.5);
        let prior = Prior::uniform(-2.0, 6.0).unwrap();
        let table = regimes_simple(&net, &prior).unwrap();
        assert_eq!(table.thresholds(), vec![0.0, 4.0]);
        assert_eq!(table.slopes(), vec![0.5, 1.0, 1.5]);
        assert_eq!((table.negative_count(), table.positive_count()), (1, 1));
        assert_eq!(table.regime(0).unwrap().slope, 1.0);
        assert_eq!(table.anchor(), (2.0, 0.0));
        matches_solver(&net, &table, -2.0, 6.0);
        let general = regimes_general(&net, &prior).unwrap();
        assert_close(&general.thresholds(), &table.thresholds(), 1e-9);
        assert_close(&general.slopes(), &table.slopes(), 1e-9);
    }

    #[test]
    fn decreasing_market_table() {
        let net = line(&[4.0, 8.0, 2.0], &[8.0, 2.0], 0.5);
        let prior = Prior::uniform(-2.0, 10.0).unwrap();
        let table = regimes_simple(&net, &prior).unwrap();
        assert_eq!(table.thresholds(), vec![2.0, 6.0]);
        // Regime 2 would start exactly at the support's upper end.
        assert_eq!(table.slopes(), vec![2.5, 2.0, 3.5]);
        matches_solver(&net, &table, -2.0, 10.0);
        let wide = Prior::uniform(-2.0, 10.0 + 1e-6).unwrap();
        let general = regimes_general(&net, &wide).unwrap();
        assert!((general.slopes()[3] - 10.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn depletion_on_both_sides() {
        let nodes = vec![
            Node { mass: 1.0, beta: 1.0, market_size: 0.0 },
            Node { mass: 1.0, beta: 1.0, market_size: 1.0 },
        ];
        let net = Network::new(nodes, vec![Edge { u: 0, v: 1, cost: 1.0 }], 0.5).unwrap();
        let prior = Prior::uniform(-4.0, 6.0).unwrap();
        let table = regimes_general(&net, &prior).unwrap();
        assert_eq!(table.thresholds(), vec![-3.0, -1.0, 3.0, 5.0]);
        let first = &table.regimes()[0];
        assert_eq!(first.kind, RegimeKind::Drained);
        assert_eq!(first.slope, 0.0);
        let last = table.regime(2).unwrap();
        assert_eq!(last.depleted, vec![1]);
        assert_eq!(last.slope, 0.5 * 2.0);
        assert_eq!(table.allocation(-3.5)[0], 0.0);
        matches_solver(&net, &table, -4.0, 6.0);
        assert!(matches!(regimes_simple(&net, &prior), Err(EquilibriumError::AssumptionViolated(_))));
    }

    #[test]
    fn empty_shock_node_stays_empty_below_the_mean() {
        let nodes = vec![
            Node { mass: 0.0, beta: 1.0, market_size: 0.0 },
            Node { mass: 1.0, beta: 1.0, market_size: 1.0 },
        ];
        let net = Network::new(nodes, vec![Edge { u: 0, v: 1, cost: 1.0 }], 0.5).unwrap();
        let prior = Prior::uniform(-3.0, 3.0).unwrap();
        let table = regimes_general(&net, &prior).unwrap();
        assert_eq!(table.negative_count(), 0);
        assert_eq!(table.regime(0).unwrap().slope, 0.0);
        matches_solver(&net, &table, -3.0, 3.0);
    }

    #[test]
    fn rejects_profitable_initial_moves() {
        let nodes = vec![
            Node { mass: 1.0, beta: 1.0, market_size: 0.0 },
            Node { mass: 1.0, beta: 1.0, market_size: 21.0 },
        ];
        let net = Network::new(nodes, vec![Edge { u: 0, v: 1, cost: 1.0 }], 0.5).unwrap();
        let prior = Prior::uniform(0.0, 2.0).unwrap();
        assert!(matches!(regimes_general(&net, &prior), Err(EquilibriumError::AssumptionViolated(_))));
    }

    #[test]
    fn regularity() {
        let net = line(&[2.0, 2.0, 2.0], &[2.0, 2.0], 0.5);
        let table = regimes_simple(&net, &Prior::uniform(-2.0, 6.0).unwrap()).unwrap();
        assert!(check_regularity(&table).holds);
        let flat = check_regularity_points(&[(0.0, 0.0), (1.0, 1.0), (2.0, 2.0), (3.0, 4.0)]);
        assert!(!flat.holds);
        assert_eq!(flat.colinear.unwrap()[2], (2.0, 2.0));
        assert!(check_regularity_points(&[(0.0, 0.0), (1.0, 1.0)]).holds);
    }

    #[test]
    fn csv_lists_every_regime() {
        let net = line(&[2.0, 2.0, 2.0], &[2.0, 2.0], 0.5);
        let table = regimes_simple(&net, &Prior::uniform(-2.0, 6.0).unwrap()).unwrap();
        let csv = table.to_csv();
        assert_eq!(csv.lines().count(), 4);
        assert!(csv.contains("1,4,1.5,2,in:1"));
    }
}
