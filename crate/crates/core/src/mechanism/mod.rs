//! Disclosure mechanisms, the posterior-mean distributions they induce, and
//! tools to construct and certify them.

mod algorithm1;
mod certificate;
mod conditions;
mod value;

pub use algorithm1::{algorithm1_thresholds, single_pool, Algorithm1Output, SinglePool};
pub use certificate::{duality_certificate, CertificateReport};
pub use conditions::{check_conditions, ConditionReport, PairWitness};
pub use value::{value_of_information, Solver};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::Prior;
use crate::pwl::{PiecewiseLinear, PwlError};

/// Pools narrower than this fraction of the support width are revealed.
pub const DEGENERATE_POOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MechanismError {
    #[error("market-size pattern does not admit a single pooling interval: {0}")]
    PatternMismatch(String),
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("invalid mechanism: {0}")]
    Invalid(String),
    #[error(transparent)]
    Pwl(#[from] PwlError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Reveal,
    Pool,
}

/// Partition of the support into cells that are either revealed or pooled
/// to their conditional mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonotonePartitional {
    cutoffs: Vec<f64>,
    modes: Vec<Mode>,
    atoms: Vec<Option<f64>>,
}

impl MonotonePartitional {
    /// `cutoffs` runs from the support's lower to upper end; one mode per cell.
    pub fn new(prior: &Prior, cutoffs: Vec<f64>, modes: Vec<Mode>) -> Result<Self, MechanismError> {
        let mut cutoffs = cutoffs;
        if cutoffs.len() < 2 || modes.len() + 1 != cutoffs.len() {
            return Err(MechanismError::Invalid(format!(
                "{} cutoffs need {} modes, got {}",
                cutoffs.len(),
                cutoffs.len().saturating_sub(1),
                modes.len()
            )));
        }
        let tol = 1e-9 * (prior.hi() - prior.lo());
        let last = cutoffs.len() - 1;
        if (cutoffs[0] - prior.lo()).abs() > tol || (cutoffs[last] - prior.hi()).abs() > tol {
            return Err(MechanismError::Invalid("cutoffs must span the support".into()));
        }
        cutoffs[0] = prior.lo();
        cutoffs[last] = prior.hi();
        if cutoffs.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(MechanismError::Invalid("cutoffs must be strictly increasing".into()));
        }
        let atoms = cutoffs
            .windows(2)
            .zip(&modes)
            .map(|(w, m)| (*m == Mode::Pool).then(|| prior.conditional_mean(w[0], w[1])))
            .collect();
        Ok(MonotonePartitional { cutoffs, modes, atoms })
    }

    pub fn full_revelation(prior: &Prior) -> Self {
        Self::new(prior, vec![prior.lo(), prior.hi()], vec![Mode::Reveal]).expect("valid by construction")
    }

    pub fn no_information(prior: &Prior) -> Self {
        Self::new(prior, vec![prior.lo(), prior.hi()], vec![Mode::Pool]).expect("valid by construction")
    }

    /// Reveals outside `[lo, hi]` and pools inside.
    pub fn reveal_pool_reveal(prior: &Prior, lo: f64, hi: f64) -> Result<Self, MechanismError> {
        let tol = DEGENERATE_POOL * (prior.hi() - prior.lo());
        let (lo, hi) = (lo.max(prior.lo()), hi.min(prior.hi()));
        if hi - lo <= tol {
            return Ok(Self::full_revelation(prior));
        }
        let mut cutoffs = vec![prior.lo()];
        let mut modes = Vec::new();
        if lo - prior.lo() > tol {
            cutoffs.push(lo);
            modes.push(Mode::Reveal);
        }
        modes.push(Mode::Pool);
        if prior.hi() - hi > tol {
            cutoffs.push(hi);
            modes.push(Mode::Reveal);
        }
        cutoffs.push(prior.hi());
        Self::new(prior, cutoffs, modes)
    }

    pub fn cutoffs(&self) -> &[f64] {
        &self.cutoffs
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn atoms(&self) -> &[Option<f64>] {
        &self.atoms
    }

    /// Cells as `(lo, hi, mode, atom)`.
    pub fn cells(&self) -> impl Iterator<Item = (f64, f64, Mode, Option<f64>)> + '_ {
        self.cutoffs
            .windows(2)
            .zip(self.modes.iter().zip(&self.atoms))
            .map(|(w, (m, a))| (w[0], w[1], *m, *a))
    }

    /// Pooled cells as `(lo, hi, atom)`.
    pub fn pools(&self) -> Vec<(f64, f64, f64)> {
        self.cells().filter_map(|(a, b, _, x)| x.map(|x| (a, b, x))).collect()
    }

    pub fn is_full_revelation(&self) -> bool {
        self.modes.iter().all(|m| *m == Mode::Reveal)
    }

    /// Merges adjacent revealed cells and reveals degenerate pools.
    pub fn canonical(&self, prior: &Prior) -> Self {
        let tol = DEGENERATE_POOL * (prior.hi() - prior.lo());
        let mut cutoffs = vec![self.cutoffs[0]];
        let mut modes: Vec<Mode> = Vec::new();
        for (a, b, mode, _) in self.cells() {
            let mode = if b - a <= tol { Mode::Reveal } else { mode };
            if mode == Mode::Reveal && modes.last() == Some(&Mode::Reveal) {
                *cutoffs.last_mut().expect("nonempty") = b;
            } else {
                modes.push(mode);
                cutoffs.push(b);
            }
        }
        Self::new(prior, cutoffs, modes).expect("canonical form of a valid mechanism")
    }

    pub fn posterior(&self, prior: &Prior) -> PosteriorDistribution {
        let mut g = PosteriorDistribution::default();
        for (a, b, mode, atom) in self.cells() {
            match (mode, atom) {
                (Mode::Pool, Some(x)) => g.atoms.push((x, prior.mass(a, b))),
                _ => g.revealed.push((a, b)),
            }
        }
        g
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes")
    }

    /// Parses and checks that atoms match the prior's conditional means.
    pub fn from_json(text: &str, prior: &Prior) -> Result<Self, MechanismError> {
        let raw: MonotonePartitional =
            serde_json::from_str(text).map_err(|e| MechanismError::Invalid(e.to_string()))?;
        let built = Self::new(prior, raw.cutoffs, raw.modes)?;
        for (a, b) in built.atoms.iter().zip(&raw.atoms) {
            match (a, b) {
                (Some(x), Some(y)) if (x - y).abs() <= 1e-9 * x.abs().max(1.0) => {}
                (None, None) => {}
                _ => return Err(MechanismError::Invalid("atoms do not match the pooled cells".into())),
            }
        }
        Ok(Self { atoms: raw.atoms, ..built })
    }
}

/// How a pooled interval splits into posterior means.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase")]
pub enum PoolShape {
    Single {
        atom: f64,
    },
    /// The tails `[lo, inner_lo] ∪ [inner_hi, hi]` pool to `x`; the middle
    /// `[inner_lo, inner_hi]` pools to `y`.
    Double {
        x: f64,
        y: f64,
        inner_lo: f64,
        inner_hi: f64,
        p_x: f64,
        p_y: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PooledInterval {
    pub lo: f64,
    pub hi: f64,
    pub shape: PoolShape,
}

/// Disjoint pooled intervals; states outside them are revealed.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct IntervalStructure {
    pub intervals: Vec<PooledInterval>,
}

impl IntervalStructure {
    pub fn has_double_interval(&self) -> bool {
        self.intervals.iter().any(|i| matches!(i.shape, PoolShape::Double { .. }))
    }

    /// The same disclosure as a partition; `None` when some pool splits in two.
    pub fn as_monotone(&self, prior: &Prior) -> Option<MonotonePartitional> {
        if self.has_double_interval() {
            return None;
        }
        let mut cutoffs = vec![prior.lo()];
        let mut modes = Vec::new();
        for iv in &self.intervals {
            if iv.lo > *cutoffs.last()? {
                cutoffs.push(iv.lo);
                modes.push(Mode::Reveal);
            }
            cutoffs.push(iv.hi);
            modes.push(Mode::Pool);
        }
        if prior.hi() > *cutoffs.last()? {
            cutoffs.push(prior.hi());
            modes.push(Mode::Reveal);
        }
        MonotonePartitional::new(prior, cutoffs, modes).ok()
    }

    pub fn posterior(&self, prior: &Prior) -> PosteriorDistribution {
        let mut g = PosteriorDistribution::default();
        let mut at = prior.lo();
        for iv in &self.intervals {
            if iv.lo > at {
                g.revealed.push((at, iv.lo));
            }
            match iv.shape {
                PoolShape::Single { atom } => g.atoms.push((atom, prior.mass(iv.lo, iv.hi))),
                PoolShape::Double { x, y, p_x, p_y, .. } => {
                    g.atoms.push((x, p_x));
                    g.atoms.push((y, p_y));
                }
            }
            at = iv.hi;
        }
        if at < prior.hi() {
            g.revealed.push((at, prior.hi()));
        }
        g
    }
}

/// Distribution of posterior means: the prior on revealed intervals plus
/// weighted atoms.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct PosteriorDistribution {
    pub revealed: Vec<(f64, f64)>,
    /// `(point, weight)`.
    pub atoms: Vec<(f64, f64)>,
}

impl PosteriorDistribution {
    pub fn total_mass(&self, prior: &Prior) -> f64 {
        self.revealed.iter().map(|&(a, b)| prior.mass(a, b)).sum::<f64>() + self.atoms.iter().map(|a| a.1).sum::<f64>()
    }

    pub fn mean(&self, prior: &Prior) -> f64 {
        self.revealed.iter().map(|&(a, b)| prior.partial_expectation(a, b)).sum::<f64>()
            + self.atoms.iter().map(|(x, w)| x * w).sum::<f64>()
    }

    /// `∫_{-∞}^s G(t) dt`, measured from the prior's lower end.
    pub fn cdf_integral(&self, prior: &Prior, s: f64) -> f64 {
        let mut total = 0.0;
        for &(a, b) in &self.revealed {
            if s <= a {
                continue;
            }
            let c = s.min(b);
            let base = prior.cdf(a);
            total += prior.cdf_integral(c) - prior.cdf_integral(a) - base * (c - a);
            total += (s - b).max(0.0) * (prior.cdf(b) - base);
        }
        for &(x, w) in &self.atoms {
            total += w * (s - x).max(0.0);
        }
        total
    }

    /// `∫ f dG`.
    pub fn expected_value(&self, f: &PiecewiseLinear, prior: &Prior) -> f64 {
        self.revealed.iter().map(|&(a, b)| f.integrate(prior, a, b)).sum::<f64>()
            + self.atoms.iter().map(|&(x, w)| w * f.eval(x)).sum::<f64>()
    }

    /// Points where the CDF integral bends.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut pts: Vec<f64> = self.atoms.iter().map(|a| a.0).collect();
        pts.extend(self.revealed.iter().flat_map(|&(a, b)| [a, b]));
        pts
    }
}

pub fn expected_revenue(f: &PiecewiseLinear, mech: &MonotonePartitional, prior: &Prior) -> f64 {
    mech.posterior(prior).expected_value(f, prior)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MpcReport {
    pub holds: bool,
    /// Point with the largest shortfall of `∫F` below `∫G`.
    pub worst_point: f64,
    pub worst_violation: f64,
    /// `|∫F - ∫G|` beyond both supports, i.e. the mean mismatch.
    pub endpoint_gap: f64,
}

/// Whether `g` is a mean-preserving contraction of the prior: `∫_{≤s} F ≥ ∫_{≤s} G`
/// on a refinement grid with equality beyond both supports (tolerance 1e-8).
pub fn mpc_check(g: &PosteriorDistribution, prior: &Prior) -> MpcReport {
    const TOL: f64 = 1e-8;
    let mut pts = g.breakpoints();
    pts.extend(prior.knots());
    pts.push(prior.lo());
    pts.push(prior.hi());
    let lo = pts.iter().copied().fold(prior.lo(), f64::min);
    let hi = pts.iter().copied().fold(prior.hi(), f64::max);
    pts.extend((0..=2000).map(|k| lo + (hi - lo) * k as f64 / 2000.0));
    let (mut worst_point, mut worst_violation) = (lo, 0.0f64);
    for &s in &pts {
        let shortfall = g.cdf_integral(prior, s) - prior.cdf_integral(s);
        if shortfall > worst_violation {
            worst_violation = shortfall;
            worst_point = s;
        }
    }
    let end = hi + 1.0;
    let endpoint_gap = (prior.cdf_integral(end) - g.cdf_integral(prior, end)).abs();
    MpcReport { holds: worst_violation <= TOL && endpoint_gap <= TOL, worst_point, worst_violation, endpoint_gap }
}
