mod common;

use common::*;
use infodesign::equilibrium::{regimes_general, regimes_simple, revenue_function};
use infodesign::mechanism::{
    algorithm1_thresholds, expected_revenue, mpc_check, single_pool, Mode, MonotonePartitional,
};
use infodesign::model::{Edge, Node, SizePattern, SizeTrend};
use infodesign::pwl::{concave_intervals, convex_intervals, tangent_between, upper_closure_with_pool};
use infodesign::{Network, Prior};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_mechanism(r: &mut ChaCha8Rng, prior: &Prior) -> MonotonePartitional {
    let k = r.random_range(0..6);
    let mut cuts: Vec<f64> = (0..k).map(|_| r.random_range(prior.lo()..prior.hi())).collect();
    cuts.push(prior.lo());
    cuts.push(prior.hi());
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-6);
    *cuts.last_mut().unwrap() = prior.hi();
    let modes = (1..cuts.len()).map(|_| if r.random_bool(0.5) { Mode::Pool } else { Mode::Reveal }).collect();
    MonotonePartitional::new(prior, cuts, modes).unwrap()
}

/// Path with balanced nodes whose sizes all fall (or all rise) by more than
/// the similarity threshold per unit distance.
fn monotone_line(r: &mut ChaCha8Rng, falling: bool) -> (Network, Prior) {
    let commission = r.random_range(0.1..0.6);
    let step = 1.0 / (1.0 - commission) + r.random_range(0.5..2.0);
    let n = r.random_range(2..=4);
    let base = 1.0 + r.random_range(0.0..1.0);
    let sizes: Vec<f64> = (0..n)
        .map(|i| {
            let k = if falling { (n - 1 - i) as f64 } else { i as f64 };
            base + step * k
        })
        .collect();
    let nodes = sizes
        .iter()
        .enumerate()
        .map(|(i, &s)| Node { mass: s, beta: 1.0, market_size: if i == 0 { 0.0 } else { s } })
        .collect();
    let edges = (1..n).map(|i| Edge { u: i - 1, v: i, cost: 1.0 }).collect();
    let net = Network::new(nodes, edges, commission).unwrap();
    let center = sizes[0];
    let prior = Prior::uniform(center - r.random_range(1.0..3.0), center + r.random_range(1.0..3.0)).unwrap();
    (net, prior)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn negation_swaps_concave_and_convex_runs(seed in any::<u64>()) {
        let mut r = rng(seed);
        let prior = random_prior(&mut r);
        let f = random_revenue(&mut r, &prior);
        let a: Vec<Vec<f64>> = concave_intervals(&f.negated()).iter().map(|c| c.kinks.iter().map(|k| k.x).collect()).collect();
        let b: Vec<Vec<f64>> = convex_intervals(&f).iter().map(|c| c.kinks.iter().map(|k| k.x).collect()).collect();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn tangent_lies_above_both_runs(seed in any::<u64>()) {
        let mut r = rng(seed);
        let prior = random_prior(&mut r);
        let f = random_revenue(&mut r, &prior);
        let runs = concave_intervals(&f);
        for lower in 0..runs.len() {
            for upper in lower + 1..runs.len() {
                if let Some(t) = tangent_between(&f, lower, upper) {
                    prop_assert!((t.line.eval(t.x) - f.eval(t.x)).abs() <= 1e-9);
                    prop_assert!((t.line.eval(t.y) - f.eval(t.y)).abs() <= 1e-9);
                    for k in runs[lower].kinks.iter().chain(&runs[upper].kinks) {
                        prop_assert!(t.line.eval(k.x) >= f.eval(k.x) - 1e-9);
                    }
                }
            }
        }
    }

    #[test]
    fn pool_closure_dominates(seed in any::<u64>()) {
        let mut r = rng(seed);
        let prior = Prior::uniform(-2.0, 8.0).unwrap();
        let f = random_revenue(&mut r, &prior);
        let Some(pool) = single_pool(&f, &prior).unwrap() else { return Ok(()); };
        let nu = upper_closure_with_pool(&f, pool.lo, pool.hi, pool.z_star).unwrap();
        for k in 0..=10_000 {
            let x = prior.lo() + (prior.hi() - prior.lo()) * k as f64 / 10_000.0;
            prop_assert!(nu.eval(x) >= f.eval(x) - 1e-9, "at {}", x);
        }
    }

    #[test]
    fn partitions_are_contractions(seed in any::<u64>()) {
        let mut r = rng(seed);
        let prior = random_prior(&mut r);
        let mech = random_mechanism(&mut r, &prior);
        prop_assert!(mpc_check(&mech.posterior(&prior), &prior).holds);
    }

    #[test]
    fn canonical_form_keeps_revenue(seed in any::<u64>()) {
        let mut r = rng(seed);
        let prior = random_prior(&mut r);
        let f = random_revenue(&mut r, &prior);
        let mech = random_mechanism(&mut r, &prior);
        let a = expected_revenue(&f, &mech, &prior);
        let b = expected_revenue(&f, &mech.canonical(&prior), &prior);
        prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
    }

    #[test]
    fn mechanism_json_round_trip(seed in any::<u64>()) {
        let mut r = rng(seed);
        let prior = random_prior(&mut r);
        let mech = random_mechanism(&mut r, &prior);
        let back = MonotonePartitional::from_json(&mech.to_json(), &prior).unwrap();
        prop_assert_eq!(back, mech);
    }

    #[test]
    fn pool_signal_is_its_conditional_mean(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.random_range(2..=6);
        let (net, prior) = random_network(&mut r, n);
        let Ok(table) = regimes_simple(&net, &prior).or_else(|_| regimes_general(&net, &prior)) else { return Ok(()); };
        let f = revenue_function(&table);
        if let Ok(out) = algorithm1_thresholds(&table, &f, &prior) {
            if !out.mechanism.is_full_revelation() {
                let mean = prior.conditional_mean(out.lower, out.upper);
                prop_assert!((out.z_star - mean).abs() <= 1e-9 * mean.abs().max(1.0));
            }
        }
    }

    #[test]
    fn monotone_sizes_pin_the_pool_to_an_end(seed in any::<u64>(), falling in any::<bool>()) {
        let mut r = rng(seed);
        let (net, prior) = monotone_line(&mut r, falling);
        let table = regimes_simple(&net, &prior).or_else(|_| regimes_general(&net, &prior));
        prop_assume!(table.is_ok());
        let table = table.unwrap();
        let expected = if falling { SizeTrend::Decreasing } else { SizeTrend::Increasing };
        let pattern = table.market_class().pattern;
        prop_assert!(matches!(pattern, SizePattern::Transition { trend, .. } if trend == expected), "{:?}", pattern);
        let f = revenue_function(&table);
        let out = algorithm1_thresholds(&table, &f, &prior).unwrap();
        if !out.mechanism.is_full_revelation() {
            if falling {
                prop_assert!((out.upper - prior.hi()).abs() <= 1e-9, "{:?}", out);
                prop_assert!(out.z_star > prior.mean());
            } else {
                prop_assert!((out.lower - prior.lo()).abs() <= 1e-9, "{:?}", out);
                prop_assert!(out.z_star < prior.mean());
            }
        }
    }
}
