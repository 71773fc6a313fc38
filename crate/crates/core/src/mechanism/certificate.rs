//! Duality certificate: a convex function above the revenue that agrees with
//! it on the posterior's support and has the same mean under both
//! distributions proves the mechanism optimal.

use serde::Serialize;

use super::{mpc_check, MonotonePartitional, MpcReport};
use crate::model::Prior;
use crate::pwl::{upper_closure_with_pool, PiecewiseLinear};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificateReport {
    pub holds: bool,
    pub max_violation: f64,
    pub convexity: f64,
    pub dominance: f64,
    pub support: f64,
    pub expectation: f64,
    pub mpc: MpcReport,
    /// The certifying function when it could be built.
    pub nu: Option<PiecewiseLinear>,
}

pub fn duality_certificate(
    f: &PiecewiseLinear,
    mech: &MonotonePartitional,
    prior: &Prior,
    tol: f64,
) -> CertificateReport {
    let g = mech.posterior(prior);
    let mpc = mpc_check(&g, prior);
    let mut nu = f.clone();
    for (lo, hi, z) in mech.pools() {
        match upper_closure_with_pool(&nu, lo, hi, z) {
            Ok(next) => nu = next,
            Err(err) => {
                let gap = match err {
                    crate::pwl::PwlError::ClosureGap { gap } => gap,
                    _ => f64::INFINITY,
                };
                return CertificateReport {
                    holds: false,
                    max_violation: gap,
                    convexity: 0.0,
                    dominance: 0.0,
                    support: gap,
                    expectation: 0.0,
                    mpc,
                    nu: None,
                };
            }
        }
    }
    let convexity = nu.kinks().iter().map(|k| (k.left - k.right).max(0.0)).fold(0.0, f64::max);

    let (lo, hi) = (prior.lo(), prior.hi());
    let mut grid: Vec<f64> = f.breakpoints().to_vec();
    grid.extend(mech.cutoffs());
    grid.extend(mech.atoms().iter().flatten());
    grid.extend((0..=1000).map(|k| lo + (hi - lo) * k as f64 / 1000.0));
    grid.retain(|x| *x >= lo && *x <= hi);
    let dominance = grid.iter().map(|&x| f.eval(x) - nu.eval(x)).fold(0.0, f64::max);

    let mut support = g.atoms.iter().map(|&(x, _)| (nu.eval(x) - f.eval(x)).abs()).fold(0.0, f64::max);
    for &(a, b) in &g.revealed {
        for &x in grid.iter().filter(|x| **x >= a && **x <= b) {
            support = support.max((nu.eval(x) - f.eval(x)).abs());
        }
    }
    let expectation = (nu.expectation(prior) - g.expected_value(&nu, prior)).abs();

    let max_violation = convexity.max(dominance).max(support).max(expectation).max(mpc.worst_violation);
    CertificateReport {
        holds: max_violation <= tol && mpc.holds,
        max_violation,
        convexity,
        dominance,
        support,
        expectation,
        mpc,
        nu: Some(nu),
    }
}
