//! Benchmark fixtures shared by the criterion targets.

use infodesign::model::{Edge, Node};
use infodesign::{Network, Prior};

/// Path of `n` nodes with unit costs whose market sizes alternate around
/// balance, and a uniform prior around the shock node's balanced size.
pub fn path(n: usize) -> (Network, Prior) {
    let nodes = (0..n)
        .map(|i| {
            let mass = 1.0 + (i % 3) as f64;
            let tilt = if i % 2 == 0 { 0.1 } else { -0.1 };
            Node { mass, beta: 1.0, market_size: if i == 0 { 0.0 } else { mass + tilt } }
        })
        .collect();
    let edges = (1..n).map(|i| Edge { u: i - 1, v: i, cost: 1.0 }).collect();
    let net = Network::new(nodes, edges, 0.4).expect("valid path");
    (net, Prior::uniform(-3.0, 5.0).expect("valid support"))
}

/// Complete graph on `n` nodes with costs growing with index distance.
pub fn complete(n: usize) -> (Network, Prior) {
    let nodes = (0..n)
        .map(|i| Node { mass: 1.0 + 0.25 * i as f64, beta: 1.0, market_size: if i == 0 { 0.0 } else { 1.0 + 0.25 * i as f64 } })
        .collect();
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            edges.push(Edge { u, v, cost: 0.5 + 0.5 * (v - u) as f64 });
        }
    }
    let net = Network::new(nodes, edges, 0.3).expect("valid graph");
    (net, Prior::uniform(-2.0, 4.0).expect("valid support"))
}
