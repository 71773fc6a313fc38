//! Revenue as a function of the shock node's posterior mean.

use super::regimes::RegimeTable;
use crate::pwl::PiecewiseLinear;

/// Piecewise-linear revenue over the prior support: breakpoints at every
/// regime threshold plus the prior mean, where the value is anchored.
pub fn revenue_function(table: &RegimeTable) -> PiecewiseLinear {
    let (anchor, anchor_value) = table.anchor();
    let mut points: Vec<(f64, f64)> = table.regimes().iter().map(|g| (g.start, g.value_start)).collect();
    let last = &table.regimes()[table.regimes().len() - 1];
    points.push((last.end, last.value_end));
    if anchor > table.lo() && anchor < table.hi() && !points.iter().any(|p| p.0 == anchor) {
        let at = points.partition_point(|p| p.0 < anchor);
        points.insert(at, (anchor, anchor_value));
    }
    PiecewiseLinear::from_points(&points).expect("regime thresholds are strictly increasing")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::{regimes_simple, revenue, solve_potential};
    use crate::model::{Edge, Network, Node, Prior};

    #[test]
    fn line_breakpoints_include_anchor() {
        let nodes = vec![
            Node { mass: 2.0, beta: 1.0, market_size: 0.0 },
            Node { mass: 2.0, beta: 1.0, market_size: 2.0 },
            Node { mass: 2.0, beta: 1.0, market_size: 2.0 },
        ];
        let edges = vec![Edge { u: 0, v: 1, cost: 1.0 }, Edge { u: 1, v: 2, cost: 1.0 }];
        let net = Network::new(nodes, edges, 0.5).unwrap();
        let table = regimes_simple(&net, &Prior::uniform(-2.0, 6.0).unwrap()).unwrap();
        let f = revenue_function(&table);
        assert_eq!(f.breakpoints(), &[-2.0, 0.0, 2.0, 4.0, 6.0]);
        assert_eq!(f.slopes(), vec![0.5, 1.0, 1.0, 1.5]);
        for &x in f.breakpoints() {
            let s = net.intercepts(x);
            let q = solve_potential(&net, &s).unwrap().profile.q;
            assert!((f.eval(x) - revenue(&net, &s, &q)).abs() < 1e-8);
        }
    }
}
