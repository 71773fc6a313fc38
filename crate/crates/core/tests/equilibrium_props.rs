mod common;

use common::*;
use infodesign::equilibrium::{
    potential, regimes_general, revenue, revenue_function, solve_potential, RegimeKind,
};
use infodesign::model::{
    check_homogeneous_balance, check_initial_balance, classify_market_sizes, r_bar, shortest_distances, Edge, Node,
};
use infodesign::{Network, Prior};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn prior_normalized_and_invertible(seed in any::<u64>()) {
        let prior = random_prior(&mut rng(seed));
        prop_assert!((prior.mass(prior.lo(), prior.hi()) - 1.0).abs() <= 1e-9);
        for k in 0..=1000 {
            let u = k as f64 / 1000.0;
            prop_assert!((prior.cdf(prior.inv_cdf(u)) - u).abs() <= 1e-8, "u = {}", u);
        }
    }

    #[test]
    fn classification_ignores_labels_within_a_group(seed in any::<u64>()) {
        let mut r = rng(seed);
        // Star: every leaf sits at distance 1, then one extra node at distance 2.
        let leaves = r.random_range(2..5);
        let mut nodes = vec![Node { mass: r.random_range(1.0..3.0), beta: 1.0, market_size: 0.0 }];
        for _ in 0..=leaves {
            nodes.push(Node { mass: 1.0, beta: 1.0, market_size: r.random_range(0.0..6.0) });
        }
        let mut edges: Vec<Edge> = (1..=leaves).map(|i| Edge { u: 0, v: i, cost: 1.0 }).collect();
        edges.push(Edge { u: 1, v: leaves + 1, cost: 1.0 });
        let net = Network::new(nodes.clone(), edges.clone(), 0.5).unwrap();
        let (a, b) = (r.random_range(2..=leaves), 1);
        // Swapping two leaves must also move the far node's attachment.
        nodes.swap(a, b);
        let edges: Vec<Edge> = edges
            .into_iter()
            .map(|e| {
                let relabel = |x: usize| if x == a { b } else if x == b { a } else { x };
                Edge { u: relabel(e.u), v: relabel(e.v), cost: e.cost }
            })
            .collect();
        let swapped = Network::new(nodes, edges, 0.5).unwrap();
        let c1 = classify_market_sizes(&net, &shortest_distances(&net).unwrap());
        let c2 = classify_market_sizes(&swapped, &shortest_distances(&swapped).unwrap());
        prop_assert_eq!(c1.pattern, c2.pattern);
        for (p, q) in c1.pairs.iter().zip(&c2.pairs) {
            prop_assert_eq!(p.trend, q.trend);
        }
    }

    #[test]
    fn homogeneous_balance_implies_initial_balance(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.random_range(2..=6);
        let (net, _) = random_network(&mut r, n);
        let balanced: Vec<Node> = net
            .nodes()
            .iter()
            .map(|nd| Node { market_size: nd.beta * nd.mass, ..*nd })
            .collect();
        let net = net.with_nodes(balanced).unwrap();
        let center = net.nodes()[0].beta * net.nodes()[0].mass;
        let prior = Prior::uniform(center - r.random_range(0.5..4.0), center + r.random_range(0.5..4.0)).unwrap();
        prop_assert!(check_homogeneous_balance(&net, &Prior::uniform(center - 1.0, center + 1.0).unwrap()).holds);
        let home = check_homogeneous_balance(&net, &prior);
        if home.holds {
            prop_assert!(check_initial_balance(&net, &prior).holds);
        }
    }

    #[test]
    fn r_bar_never_falls_when_size_gaps_widen(seed in any::<u64>(), extra in 0.01f64..3.0) {
        let mut r = rng(seed);
        let n = r.random_range(3..=6);
        let (net, _) = random_network(&mut r, n);
        let dist = shortest_distances(&net).unwrap();
        let before = r_bar(&net, &dist).unwrap();
        // Raising the largest size widens its gap to every other node.
        let shock_size = net.nodes()[0].beta * net.nodes()[0].mass;
        let top = (1..n).max_by(|&i, &j| net.nodes()[i].market_size.total_cmp(&net.nodes()[j].market_size)).unwrap();
        prop_assume!(net.nodes()[top].market_size >= shock_size);
        let mut nodes = net.nodes().to_vec();
        nodes[top].market_size += extra;
        let wider = net.with_nodes(nodes).unwrap();
        let after = r_bar(&wider, &shortest_distances(&wider).unwrap()).unwrap();
        prop_assert!(after >= before - 1e-12, "{} -> {}", before, after);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn solver_beats_random_feasible_profiles(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.random_range(2..=6);
        let (net, prior) = random_network(&mut r, n);
        let s = net.intercepts(r.random_range(prior.lo()..prior.hi()));
        let eq = solve_potential(&net, &s).unwrap();
        prop_assert!(eq.residual <= 1e-8);
        for _ in 0..1000 {
            let x: Vec<Vec<f64>> = net
                .nodes()
                .iter()
                .map(|nd| {
                    let w: Vec<f64> = (0..n).map(|_| r.random_range(0.0..1.0f64).powi(3)).collect();
                    let total: f64 = w.iter().sum();
                    w.iter().map(|v| nd.mass * v / total).collect()
                })
                .collect();
            prop_assert!(potential(&net, &s, &x) <= eq.potential + 1e-9);
        }
    }

    #[test]
    fn shock_node_share_rises_with_its_mean(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.random_range(2..=5);
        let (net, prior) = random_network(&mut r, n);
        let steps = ((prior.hi() - prior.lo()) / 1e-2).floor() as usize;
        let mut last = f64::NEG_INFINITY;
        for k in 0..=steps {
            let s0 = prior.lo() + k as f64 * 1e-2;
            let q0 = solve_potential(&net, &net.intercepts(s0)).unwrap().profile.q[0];
            prop_assert!(q0 >= last - 1e-9, "q0 fell at {}: {} < {}", s0, q0, last);
            last = q0;
        }
    }

    #[test]
    fn revenue_function_matches_solver(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.random_range(2..=7);
        let (net, prior) = random_network(&mut r, n);
        prop_assume!(check_initial_balance(&net, &prior).holds);
        let table = regimes_general(&net, &prior).unwrap();
        let f = revenue_function(&table);
        for _ in 0..100 {
            let s0 = r.random_range(prior.lo()..prior.hi());
            let s = net.intercepts(s0);
            let q = solve_potential(&net, &s).unwrap().profile.q;
            let direct = revenue(&net, &s, &q);
            prop_assert!((f.eval(s0) - direct).abs() <= 1e-6 * direct.abs().max(1.0), "{} vs {}", f.eval(s0), direct);
        }
        let rm0 = net.commission() * net.nodes()[0].mass;
        if let Some(zero) = table.regime(0) {
            prop_assert_eq!(zero.slope, rm0);
        }
        for g in table.regimes() {
            if g.kind == RegimeKind::Drained {
                prop_assert_eq!(g.slope, 0.0);
            }
        }
    }
}

#[test]
fn drained_regime_is_flat() {
    let (net, prior) = two_node();
    let table = regimes_general(&net, &prior).unwrap();
    let drained: Vec<_> = table.regimes().iter().filter(|g| g.kind == RegimeKind::Drained).collect();
    assert!(!drained.is_empty());
    assert!(drained.iter().all(|g| g.slope == 0.0));
}
