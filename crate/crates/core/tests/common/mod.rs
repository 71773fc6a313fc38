#![allow(dead_code)]

use infodesign::model::{Edge, Node};
use infodesign::{Network, PiecewiseLinear, Prior};
use rand::Rng;

/// Path `0 - 1 - ... - n` with unit costs and unit price sensitivity.
pub fn line(masses: &[f64], sizes: &[f64], commission: f64) -> Network {
    let nodes = masses
        .iter()
        .enumerate()
        .map(|(i, &mass)| Node { mass, beta: 1.0, market_size: if i == 0 { 0.0 } else { sizes[i - 1] } })
        .collect();
    let edges = (1..masses.len()).map(|i| Edge { u: i - 1, v: i, cost: 1.0 }).collect();
    Network::new(nodes, edges, commission).unwrap()
}

/// Balanced three-node path with equal sizes.
pub fn line3() -> (Network, Prior) {
    (line(&[2.0, 2.0, 2.0], &[2.0, 2.0], 0.5), Prior::uniform(-2.0, 6.0).unwrap())
}

/// Three-node path whose market sizes drop sharply away from the shock.
pub fn line3_dec() -> (Network, Prior) {
    (line(&[4.0, 8.0, 2.0], &[8.0, 2.0], 0.5), Prior::uniform(-2.0, 10.0).unwrap())
}

/// Mirror of `line3_dec`: market sizes rise sharply away from the shock.
pub fn line3_inc() -> (Network, Prior) {
    (line(&[4.0, 2.0, 8.0], &[2.0, 8.0], 0.5), Prior::uniform(-4.0, 12.0).unwrap())
}

/// Two nodes where both sides drain within the support.
pub fn two_node() -> (Network, Prior) {
    (line(&[1.0, 1.0], &[1.0], 0.5), Prior::uniform(-4.0, 6.0).unwrap())
}

/// Revenue with two concave bumps over a convex valley; no monotone
/// partition is optimal under `U[0, 10]`.
pub fn two_bumps() -> (PiecewiseLinear, Prior) {
    let value = |z: f64| {
        let tent = |peak: f64| (1.0 - (z - peak).abs() / 0.8).max(0.0);
        0.3 * (z - 5.0).abs() + tent(4.5) + tent(7.0)
    };
    let xs = [0.0, 3.7, 4.5, 5.0, 5.3, 6.2, 7.0, 7.8, 10.0];
    let pts: Vec<(f64, f64)> = xs.iter().map(|&x| (x, value(x))).collect();
    (PiecewiseLinear::from_points(&pts).unwrap(), Prior::uniform(0.0, 10.0).unwrap())
}

/// Connected network on `n` nodes whose non-shock market sizes sit near
/// balance, plus a prior for the shock node centred near its balanced size.
pub fn random_network<R: Rng>(rng: &mut R, n: usize) -> (Network, Prior) {
    let commission = rng.random_range(0.1..0.7);
    let nodes: Vec<Node> = (0..n)
        .map(|i| {
            let mass = rng.random_range(0.5..3.0);
            let beta = rng.random_range(0.5..2.0);
            let noise = rng.random_range(-0.2..0.2);
            Node { mass, beta, market_size: if i == 0 { 0.0 } else { beta * mass + noise } }
        })
        .collect();
    let mut edges = Vec::new();
    for i in 1..n {
        let j = rng.random_range(0..i);
        edges.push(Edge { u: j, v: i, cost: rng.random_range(0.5..2.0) });
    }
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(0.2) {
                edges.push(Edge { u: i, v: j, cost: rng.random_range(0.5..2.0) });
            }
        }
    }
    let center = nodes[0].beta * nodes[0].mass + rng.random_range(-0.2..0.2);
    let prior = Prior::uniform(center - rng.random_range(1.0..6.0), center + rng.random_range(1.0..6.0)).unwrap();
    (Network::new(nodes, edges, commission).unwrap(), prior)
}

/// One of the four prior families with random parameters.
pub fn random_prior<R: Rng>(rng: &mut R) -> Prior {
    let lo = rng.random_range(-5.0..0.0);
    let hi = lo + rng.random_range(1.0..10.0);
    match rng.random_range(0..4) {
        0 => Prior::uniform(lo, hi).unwrap(),
        1 => {
            let mean = rng.random_range(lo..hi);
            Prior::truncated_gaussian(mean, rng.random_range(0.3..3.0) * (hi - lo) / 4.0, lo, hi).unwrap()
        }
        2 => {
            let mid = rng.random_range(lo + 0.1 * (hi - lo)..hi - 0.1 * (hi - lo));
            let comps = [
                (rng.random_range(0.2..1.0), lo, mid),
                (rng.random_range(0.2..1.0), rng.random_range(lo..mid), hi),
            ];
            Prior::mixture_of_uniforms(&comps).unwrap()
        }
        _ => {
            let k = rng.random_range(2..6);
            let mut zs: Vec<f64> = (0..k).map(|_| rng.random_range(lo..hi)).collect();
            zs.push(lo);
            zs.push(hi);
            zs.sort_by(f64::total_cmp);
            zs.dedup();
            let steps: Vec<f64> = (1..zs.len()).map(|_| rng.random_range(0.1..1.0)).collect();
            let total: f64 = steps.iter().sum();
            let mut fs = vec![0.0];
            for s in &steps {
                fs.push(fs.last().unwrap() + s / total);
            }
            *fs.last_mut().unwrap() = 1.0;
            let pts: Vec<(f64, f64)> = zs.into_iter().zip(fs).collect();
            Prior::piecewise_linear_cdf(&pts).unwrap()
        }
    }
}

/// Piecewise-linear function on the prior's support with random kinks.
pub fn random_revenue<R: Rng>(rng: &mut R, prior: &Prior) -> PiecewiseLinear {
    let (lo, hi) = (prior.lo(), prior.hi());
    let k = rng.random_range(1..7);
    let mut xs: Vec<f64> = (0..k).map(|_| rng.random_range(lo..hi)).collect();
    xs.push(lo);
    xs.push(hi);
    xs.sort_by(f64::total_cmp);
    xs.dedup_by(|a, b| (*a - *b).abs() < 1e-3 * (hi - lo));
    *xs.last_mut().unwrap() = hi;
    let slopes: Vec<f64> = (1..xs.len()).map(|_| rng.random_range(-2.0..2.0)).collect();
    PiecewiseLinear::from_slopes(lo, rng.random_range(-1.0..1.0), &xs[1..], &slopes).unwrap()
}
