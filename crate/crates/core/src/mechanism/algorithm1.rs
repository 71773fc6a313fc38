//! One pooling interval under a supporting line.
//!
//! A candidate line either continues an affine piece of the revenue function
//! or pivots on a concave kink. The pool is the component of `{line >= R}`
//! around the touch point; the candidate is valid when the pool's
//! conditional mean lands back on the touch point.

use serde::Serialize;

use super::{expected_revenue, MechanismError, MonotonePartitional, DEGENERATE_POOL};
use crate::equilibrium::RegimeTable;
use crate::model::{Prior, SizePattern};
use crate::pwl::{concave_intervals, Line, PiecewiseLinear};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SinglePool {
    pub lo: f64,
    pub hi: f64,
    pub z_star: f64,
    pub line: Line,
    pub revenue: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Algorithm1Output {
    pub mechanism: MonotonePartitional,
    pub lower: f64,
    pub upper: f64,
    pub z_star: f64,
}

fn pool_under(f: &PiecewiseLinear, prior: &Prior, line: Line, a: f64, b: f64) -> (f64, f64, f64) {
    let (lo, hi) = f.touching_component(line, a, b);
    (lo, hi, prior.conditional_mean(lo, hi))
}

/// Best reveal-pool-reveal mechanism whose pool sits under a line touching
/// `f` at the pool's conditional mean. `None` when `f` has no concave kink.
pub fn single_pool(f: &PiecewiseLinear, prior: &Prior) -> Result<Option<SinglePool>, MechanismError> {
    let f = f.simplified();
    let intervals = concave_intervals(&f);
    if intervals.is_empty() {
        return Ok(None);
    }
    let width = prior.hi() - prior.lo();
    let xs = f.breakpoints();
    let mut candidates: Vec<(f64, f64, f64, Line)> = Vec::new();
    for interval in &intervals {
        let first = interval.kinks[0].index;
        let last = interval.kinks[interval.kinks.len() - 1].index;
        for j in (first - 1)..=last {
            let line = f.piece(j);
            let (lo, hi, mean) = pool_under(&f, prior, line, xs[j], xs[j + 1]);
            let tol = 1e-12 * width.max(1.0);
            if mean >= xs[j] - tol && mean <= xs[j + 1] + tol {
                candidates.push((lo, hi, mean, line));
            }
        }
        for kink in &interval.kinks {
            let at = |gamma: f64| {
                let line = Line::through(kink.x, kink.value, gamma);
                let (lo, hi, mean) = pool_under(&f, prior, line, kink.x, kink.x);
                (lo, hi, mean, line)
            };
            let (mut g_lo, mut g_hi) = (kink.right, kink.left);
            if at(g_lo).2 > kink.x || at(g_hi).2 < kink.x {
                continue;
            }
            for _ in 0..200 {
                let mid = 0.5 * (g_lo + g_hi);
                if at(mid).2 < kink.x {
                    g_lo = mid;
                } else {
                    g_hi = mid;
                }
                if g_hi - g_lo <= 1e-15 * g_hi.abs().max(1.0) {
                    break;
                }
            }
            if g_hi - g_lo > 1e-10 * g_hi.abs().max(1.0) {
                return Err(MechanismError::NumericalFailure(format!(
                    "tangent slope at {} did not converge",
                    kink.x
                )));
            }
            candidates.push(at(0.5 * (g_lo + g_hi)));
        }
    }
    let scale = f.values().iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let mut best: Option<SinglePool> = None;
    for (lo, hi, z_star, line) in candidates {
        if hi - lo <= DEGENERATE_POOL * width || (line.eval(z_star) - f.eval(z_star)).abs() > 1e-9 * scale {
            continue;
        }
        let Some((lo, hi)) = tighten(&f, prior, line, lo, hi, z_star) else {
            continue;
        };
        let mech = MonotonePartitional::reveal_pool_reveal(prior, lo, hi)?;
        let revenue = expected_revenue(&f, &mech, prior);
        let z_star = prior.conditional_mean(lo, hi);
        if best.as_ref().is_none_or(|b| revenue > b.revenue) {
            best = Some(SinglePool { lo, hi, z_star, line, revenue });
        }
    }
    Ok(best)
}

/// Smallest pool with the same revenue. Where `line` coincides with `f` at
/// an end of the pool, states there can be revealed instead: the pool stops
/// as soon as its mean reaches the coincident stretch. `None` when the line
/// never rises strictly above `f`, so pooling gains nothing.
fn tighten(f: &PiecewiseLinear, prior: &Prior, line: Line, lo: f64, hi: f64, z: f64) -> Option<(f64, f64)> {
    let scale = f.values().iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let above = |x: f64| line.eval(x) - f.eval(x) > 1e-9 * scale;
    let mut pts = vec![lo];
    pts.extend(f.breakpoints().iter().copied().filter(|x| *x > lo && *x < hi));
    pts.push(hi);
    let strict: Vec<usize> = (0..pts.len() - 1).filter(|&i| above(pts[i]) || above(pts[i + 1])).collect();
    let (first, last) = (*strict.first()?, *strict.last()?);
    let (s_lo, s_hi) = (pts[first], pts[last + 1]);
    let mean = |a: f64, b: f64| prior.conditional_mean(a, b);
    let bisect = |mut a: f64, mut b: f64, go_right: &dyn Fn(f64) -> bool| {
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if go_right(mid) {
                a = mid;
            } else {
                b = mid;
            }
            if b - a <= 1e-15 * b.abs().max(1.0) {
                break;
            }
        }
        0.5 * (a + b)
    };
    if z >= s_hi && s_hi < hi && mean(s_lo, hi) > s_hi {
        Some((s_lo, bisect(s_hi, hi, &|b| mean(s_lo, b) < s_hi)))
    } else if z <= s_lo && s_lo > lo && mean(lo, s_hi) < s_lo {
        Some((bisect(lo, s_lo, &|a| mean(a, s_hi) < s_lo), s_hi))
    } else {
        Some((lo, hi))
    }
}

/// Reveal-pool-reveal thresholds for markets whose size pattern is similar
/// everywhere or has one monotone transition; full revelation when `f` is convex.
pub fn algorithm1_thresholds(
    table: &RegimeTable,
    f: &PiecewiseLinear,
    prior: &Prior,
) -> Result<Algorithm1Output, MechanismError> {
    let mean = prior.mean();
    let full = Algorithm1Output {
        mechanism: MonotonePartitional::full_revelation(prior),
        lower: mean,
        upper: mean,
        z_star: mean,
    };
    match table.market_class().pattern {
        SizePattern::Mixed => {
            return Err(MechanismError::PatternMismatch(
                "adjacent distance groups change market size in both directions".into(),
            ))
        }
        SizePattern::Similar | SizePattern::Transition { .. } => {}
    }
    if f.simplified().is_convex() {
        return Ok(full);
    }
    match single_pool(f, prior)? {
        Some(pool) => Ok(Algorithm1Output {
            mechanism: MonotonePartitional::reveal_pool_reveal(prior, pool.lo, pool.hi)?,
            lower: pool.lo,
            upper: pool.hi,
            z_star: prior.conditional_mean(pool.lo, pool.hi),
        }),
        None => Err(MechanismError::NumericalFailure("no supporting line matches its pool mean".into())),
    }
}
