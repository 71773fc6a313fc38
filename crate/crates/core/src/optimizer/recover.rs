//! Pooling structure behind an optimal per-piece allocation.
//!
//! Posterior means are sorted and matched to prior quantiles. A prefix whose
//! majorization constraint is tight closes a run: the run's atoms come from
//! exactly the prior mass between the two neighbouring tight quantiles. A
//! one-atom run is an ordinary pool. A two-atom run `x < y` splits its
//! interval: the middle part pools to `y` and both tails pool to `x`.

use serde::Serialize;

use super::{OptimizerError, RegimeAllocation};
use crate::mechanism::{IntervalStructure, PoolShape, PooledInterval};
use crate::model::Prior;
use crate::pwl::PiecewiseLinear;

const TIGHT: f64 = 1e-7;
const RESIDUAL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Recovery {
    pub structure: IntervalStructure,
    /// Largest residual of the mass/mean equations over all runs.
    pub residual: f64,
}

struct Atom {
    mean: f64,
    p: f64,
    y: f64,
}

fn merged_atoms(alloc: &RegimeAllocation, width: f64) -> Vec<Atom> {
    let mut atoms: Vec<Atom> = alloc
        .pieces
        .iter()
        .filter(|c| c.p > 1e-12)
        .filter_map(|c| c.mean().map(|mean| Atom { mean, p: c.p, y: c.y }))
        .collect();
    atoms.sort_by(|a, b| a.mean.total_cmp(&b.mean));
    let mut out: Vec<Atom> = Vec::with_capacity(atoms.len());
    for a in atoms {
        match out.last_mut() {
            Some(last) if (a.mean - last.mean).abs() <= 1e-9 * width.max(1.0) => {
                last.p += a.p;
                last.y += a.y;
                last.mean = last.y / last.p;
            }
            _ => out.push(a),
        }
    }
    out
}

/// Splits `[lo, hi]` so the middle part has mass `p_inner` and mean `inner`.
fn split_double(prior: &Prior, lo: f64, hi: f64, p_inner: f64, inner: f64) -> (f64, f64) {
    let (f_lo, f_hi) = (prior.cdf(lo), prior.cdf(hi));
    let upper_of = |z: f64| prior.inv_cdf((prior.cdf(z) + p_inner).min(f_hi));
    let (mut a, mut b) = (lo, prior.inv_cdf((f_hi - p_inner).max(f_lo)));
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if prior.conditional_mean(mid, upper_of(mid)) < inner {
            a = mid;
        } else {
            b = mid;
        }
        if b - a <= 1e-15 * b.abs().max(1.0) {
            break;
        }
    }
    let start = 0.5 * (a + b);
    (start, upper_of(start))
}

pub fn recover_structure(
    alloc: &RegimeAllocation,
    f: &PiecewiseLinear,
    prior: &Prior,
) -> Result<Recovery, OptimizerError> {
    let width = prior.hi() - prior.lo();
    let atoms = merged_atoms(alloc, width);
    let breaks: Vec<f64> = f.simplified().breakpoints().to_vec();
    let scale = f.values().iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let quantile = |u: f64| {
        if u <= 0.0 {
            prior.lo()
        } else if u >= 1.0 {
            prior.hi()
        } else {
            prior.inv_cdf(u)
        }
    };

    let mut structure = IntervalStructure::default();
    let mut residual = 0.0f64;
    let (mut mass, mut mean) = (0.0, 0.0);
    let mut start = 0;
    let mut start_mass = 0.0;
    for k in 0..atoms.len() {
        mass += atoms[k].p;
        mean += atoms[k].y;
        let slack = mean - prior.quantile_integral(mass.min(1.0));
        if k + 1 < atoms.len() && slack > TIGHT * width.max(1.0) {
            continue;
        }
        let run = &atoms[start..=k];
        let (lo, hi) = (quantile(start_mass), quantile(mass));
        let (p_run, pe_run) = (prior.mass(lo, hi), prior.partial_expectation(lo, hi));
        match run {
            [a] => {
                residual = residual.max((a.p - p_run).abs()).max((a.y - pe_run).abs());
                // Pooling that earns what revealing earns is revealing.
                let atom = prior.conditional_mean(lo, hi);
                let gain = f.integrate(prior, lo, hi) - p_run * f.eval(atom);
                let inside_piece = !breaks.iter().any(|b| *b > lo && *b < hi);
                if !inside_piece && gain.abs() > 1e-9 * scale && hi > lo {
                    structure.intervals.push(PooledInterval {
                        lo,
                        hi,
                        shape: PoolShape::Single { atom },
                    });
                }
            }
            [a, b] => {
                let (x, y) = (a.mean, b.mean);
                let (inner_lo, inner_hi) = split_double(prior, lo, hi, b.p, y);
                let pe_inner = prior.partial_expectation(inner_lo, inner_hi);
                let mass_eq = a.p + b.p - p_run;
                let mean_eq = x * a.p + y * b.p - pe_run;
                let inner_eq = pe_inner - y * b.p;
                let tails_eq = (pe_run - pe_inner) - x * a.p;
                residual = residual
                    .max(mass_eq.abs())
                    .max(mean_eq.abs())
                    .max(inner_eq.abs())
                    .max(tails_eq.abs());
                structure.intervals.push(PooledInterval {
                    lo,
                    hi,
                    shape: PoolShape::Double { x, y, inner_lo, inner_hi, p_x: a.p, p_y: b.p },
                });
            }
            _ => {
                return Err(OptimizerError::RecoveryMismatch(format!(
                    "{} posterior means share one pooling interval [{lo}, {hi}]",
                    run.len()
                )))
            }
        }
        start = k + 1;
        start_mass = mass;
    }
    if residual > RESIDUAL {
        return Err(OptimizerError::RecoveryMismatch(format!("mass/mean residual {residual:e}")));
    }
    Ok(Recovery { structure, residual })
}
