//! Continuous piecewise-linear functions stored as breakpoints and values.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::Prior;

/// Relative tolerance for treating two slopes as equal.
pub const SLOPE_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PwlError {
    #[error("need at least two breakpoints, got {0}")]
    TooFewPoints(usize),
    #[error("breakpoints must be finite and strictly increasing (index {0})")]
    NotIncreasing(usize),
    #[error("values must be finite (index {0})")]
    NonFinite(usize),
    #[error("interval [{a}, {b}] is outside the domain [{lo}, {hi}]")]
    Domain { a: f64, b: f64, lo: f64, hi: f64 },
    #[error("pooled line misses the function by {gap} at a pool end")]
    ClosureGap { gap: f64 },
}

fn same_slope(a: f64, b: f64) -> bool {
    (a - b).abs() <= SLOPE_TOL * a.abs().max(b.abs()).max(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub slope: f64,
    pub intercept: f64,
}

impl Line {
    pub fn through(x: f64, y: f64, slope: f64) -> Self {
        Line { slope, intercept: y - slope * x }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.slope * x + self.intercept
    }
}

/// An interior breakpoint with its one-sided slopes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Kink {
    /// Index into the breakpoint list.
    pub index: usize,
    pub x: f64,
    pub value: f64,
    pub left: f64,
    pub right: f64,
}

impl Kink {
    pub fn is_concave(&self) -> bool {
        self.left > self.right && !same_slope(self.left, self.right)
    }

    pub fn is_convex(&self) -> bool {
        self.left < self.right && !same_slope(self.left, self.right)
    }

    /// Whether `slope` lies in `[min(left, right), max(left, right)]`.
    pub fn supports(&self, slope: f64) -> bool {
        let (lo, hi) = (self.left.min(self.right), self.left.max(self.right));
        let tol = SLOPE_TOL * lo.abs().max(hi.abs()).max(1.0);
        slope >= lo - tol && slope <= hi + tol
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseLinear {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl PiecewiseLinear {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self, PwlError> {
        if xs.len() < 2 || xs.len() != ys.len() {
            return Err(PwlError::TooFewPoints(xs.len().min(ys.len())));
        }
        for (k, x) in xs.iter().enumerate() {
            if !x.is_finite() || (k > 0 && *x <= xs[k - 1]) {
                return Err(PwlError::NotIncreasing(k));
            }
        }
        if let Some(k) = ys.iter().position(|y| !y.is_finite()) {
            return Err(PwlError::NonFinite(k));
        }
        Ok(PiecewiseLinear { xs, ys })
    }

    pub fn from_points(points: &[(f64, f64)]) -> Result<Self, PwlError> {
        Self::new(points.iter().map(|p| p.0).collect(), points.iter().map(|p| p.1).collect())
    }

    /// Builds from a start point, interior breakpoints and one slope per piece.
    pub fn from_slopes(x0: f64, y0: f64, xs: &[f64], slopes: &[f64]) -> Result<Self, PwlError> {
        if xs.len() != slopes.len() {
            return Err(PwlError::TooFewPoints(xs.len().min(slopes.len()) + 1));
        }
        let mut pts = vec![(x0, y0)];
        for (x, a) in xs.iter().zip(slopes) {
            let (px, py) = pts[pts.len() - 1];
            pts.push((*x, py + a * (x - px)));
        }
        Self::from_points(&pts)
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.xs
    }

    pub fn values(&self) -> &[f64] {
        &self.ys
    }

    pub fn lo(&self) -> f64 {
        self.xs[0]
    }

    pub fn hi(&self) -> f64 {
        self.xs[self.xs.len() - 1]
    }

    pub fn pieces(&self) -> usize {
        self.xs.len() - 1
    }

    pub fn slopes(&self) -> Vec<f64> {
        self.xs
            .windows(2)
            .zip(self.ys.windows(2))
            .map(|(x, y)| (y[1] - y[0]) / (x[1] - x[0]))
            .collect()
    }

    /// Affine piece `k` as a line on the whole axis.
    pub fn piece(&self, k: usize) -> Line {
        let a = (self.ys[k + 1] - self.ys[k]) / (self.xs[k + 1] - self.xs[k]);
        Line::through(self.xs[k], self.ys[k], a)
    }

    /// Index of the piece containing `x`; breakpoints belong to the piece on their right.
    pub fn piece_index(&self, x: f64) -> usize {
        self.xs.partition_point(|&b| b <= x).clamp(1, self.pieces()) - 1
    }

    /// Evaluates, extending the end pieces linearly outside the domain.
    pub fn eval(&self, x: f64) -> f64 {
        let k = self.piece_index(x);
        if x == self.xs[k] {
            return self.ys[k];
        }
        if x == self.xs[k + 1] {
            return self.ys[k + 1];
        }
        let t = (x - self.xs[k]) / (self.xs[k + 1] - self.xs[k]);
        self.ys[k] + t * (self.ys[k + 1] - self.ys[k])
    }

    pub fn kinks(&self) -> Vec<Kink> {
        let slopes = self.slopes();
        (1..self.xs.len() - 1)
            .map(|k| Kink { index: k, x: self.xs[k], value: self.ys[k], left: slopes[k - 1], right: slopes[k] })
            .collect()
    }

    /// Kink at `x`, with equal one-sided slopes inside a piece.
    pub fn subdifferential(&self, x: f64) -> (f64, f64) {
        let slopes = self.slopes();
        let k = self.piece_index(x);
        if x == self.xs[k] && k > 0 {
            (slopes[k - 1], slopes[k])
        } else {
            (slopes[k], slopes[k])
        }
    }

    /// Drops interior breakpoints whose adjacent slopes agree.
    pub fn simplified(&self) -> Self {
        let slopes = self.slopes();
        let mut xs = vec![self.xs[0]];
        let mut ys = vec![self.ys[0]];
        for k in 1..self.xs.len() - 1 {
            if !same_slope(slopes[k - 1], slopes[k]) {
                xs.push(self.xs[k]);
                ys.push(self.ys[k]);
            }
        }
        xs.push(self.hi());
        ys.push(self.ys[self.ys.len() - 1]);
        PiecewiseLinear { xs, ys }
    }

    pub fn is_convex(&self) -> bool {
        self.kinks().iter().all(|k| !k.is_concave())
    }

    pub fn negated(&self) -> Self {
        PiecewiseLinear { xs: self.xs.clone(), ys: self.ys.iter().map(|y| -y).collect() }
    }

    /// Same function with extra breakpoints at `points` inside the domain.
    pub fn refined(&self, points: &[f64]) -> Self {
        let mut xs: Vec<f64> = self.xs.clone();
        xs.extend(points.iter().copied().filter(|x| *x > self.lo() && *x < self.hi()));
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        let ys = xs.iter().map(|&x| self.eval(x)).collect();
        PiecewiseLinear { xs, ys }
    }

    pub fn chord(&self, a: f64, b: f64) -> Line {
        let (fa, fb) = (self.eval(a), self.eval(b));
        if a == b {
            let (left, right) = self.subdifferential(a);
            return Line::through(a, fa, 0.5 * (left + right));
        }
        Line::through(a, fa, (fb - fa) / (b - a))
    }

    /// `∫_a^b f dF`, exact per affine piece.
    pub fn integrate(&self, prior: &Prior, a: f64, b: f64) -> f64 {
        let (a, b) = (a.max(prior.lo()), b.min(prior.hi()));
        if b <= a {
            return 0.0;
        }
        let mut cuts = vec![a];
        cuts.extend(self.xs.iter().copied().filter(|x| *x > a && *x < b));
        cuts.push(b);
        cuts.windows(2)
            .map(|w| {
                let line = self.chord(w[0], w[1]);
                line.intercept * prior.mass(w[0], w[1]) + line.slope * prior.partial_expectation(w[0], w[1])
            })
            .sum()
    }

    /// `∫ f dF` over the prior's support.
    pub fn expectation(&self, prior: &Prior) -> f64 {
        self.integrate(prior, prior.lo(), prior.hi())
    }

    /// Largest `|slope|`.
    pub fn lipschitz(&self) -> f64 {
        self.slopes().iter().fold(0.0, |m, a| m.max(a.abs()))
    }

    /// Largest interval around `[a, b]` on which `line >= self`, clipped to the domain.
    /// `line` must touch or dominate `self` on `[a, b]`.
    pub fn touching_component(&self, line: Line, a: f64, b: f64) -> (f64, f64) {
        let scale = self.ys.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let tol = 1e-12 * scale;
        let gap = |x: f64| self.eval(x) - line.eval(x);
        let crossing = |inside: f64, outside: f64| {
            let (hi_in, hi_out) = (gap(inside), gap(outside));
            let t = (tol - hi_in) / (hi_out - hi_in);
            inside + t.clamp(0.0, 1.0) * (outside - inside)
        };
        let mut lo = self.lo();
        let mut prev = a;
        for &x in self.xs.iter().rev().filter(|x| **x < a) {
            if gap(x) > tol {
                lo = crossing(prev, x);
                break;
            }
            prev = x;
        }
        let mut hi = self.hi();
        let mut prev = b;
        for &x in self.xs.iter().filter(|x| **x > b) {
            if gap(x) > tol {
                hi = crossing(prev, x);
                break;
            }
            prev = x;
        }
        (lo, hi)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("s0,R\n");
        for (x, y) in self.xs.iter().zip(&self.ys) {
            out.push_str(&format!("{},{}\n", crate::fmt_sig(*x), crate::fmt_sig(*y)));
        }
        out
    }
}

/// A maximal run of consecutive strictly concave kinks (after merging equal slopes).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcaveInterval {
    pub kinks: Vec<Kink>,
}

impl ConcaveInterval {
    pub fn lo(&self) -> f64 {
        self.kinks[0].x
    }

    pub fn hi(&self) -> f64 {
        self.kinks[self.kinks.len() - 1].x
    }

    /// Slope entering the interval.
    pub fn slope_in(&self) -> f64 {
        self.kinks[0].left
    }

    /// Slope leaving the interval.
    pub fn slope_out(&self) -> f64 {
        self.kinks[self.kinks.len() - 1].right
    }
}

pub fn concave_intervals(f: &PiecewiseLinear) -> Vec<ConcaveInterval> {
    let mut out: Vec<ConcaveInterval> = Vec::new();
    let mut run: Vec<Kink> = Vec::new();
    for k in f.simplified().kinks() {
        if k.is_concave() {
            run.push(k);
        } else if !run.is_empty() {
            out.push(ConcaveInterval { kinks: std::mem::take(&mut run) });
        }
    }
    if !run.is_empty() {
        out.push(ConcaveInterval { kinks: run });
    }
    out
}

/// Runs of strictly convex kinks, by negation.
pub fn convex_intervals(f: &PiecewiseLinear) -> Vec<ConcaveInterval> {
    concave_intervals(&f.negated())
        .into_iter()
        .map(|mut c| {
            for k in &mut c.kinks {
                (k.left, k.right, k.value) = (-k.left, -k.right, -k.value);
            }
            c
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TangentLine {
    pub line: Line,
    /// Touch point in the lower interval.
    pub x: f64,
    /// Touch point in the upper interval.
    pub y: f64,
    pub lower: usize,
    pub upper: usize,
}

/// The line touching `f` at a kink of concave interval `lower` and a kink of
/// interval `upper`, with its slope in both subdifferentials.
pub fn tangent_between(f: &PiecewiseLinear, lower: usize, upper: usize) -> Option<TangentLine> {
    let intervals = concave_intervals(f);
    if lower >= upper || upper >= intervals.len() {
        return None;
    }
    for a in &intervals[lower].kinks {
        for b in &intervals[upper].kinks {
            let slope = (b.value - a.value) / (b.x - a.x);
            if a.supports(slope) && b.supports(slope) {
                return Some(TangentLine {
                    line: Line::through(a.x, a.value, slope),
                    x: a.x,
                    y: b.x,
                    lower,
                    upper,
                });
            }
        }
    }
    None
}

/// Replaces `f` on `[lo, hi]` by the line through `(z, f(z))` that joins
/// the pool ends, giving the convex certificate for a pooled interval.
///
/// An end on the domain boundary does not constrain the line: with one free
/// end the line passes through the other, and with two it takes the chord
/// slope clamped into the subdifferential at `z`.
pub fn upper_closure_with_pool(f: &PiecewiseLinear, lo: f64, hi: f64, z: f64) -> Result<PiecewiseLinear, PwlError> {
    let tol_x = 1e-12 * (f.hi() - f.lo()).max(1.0);
    if lo < f.lo() - tol_x || hi > f.hi() + tol_x || lo > hi || z < lo - tol_x || z > hi + tol_x {
        return Err(PwlError::Domain { a: lo, b: hi, lo: f.lo(), hi: f.hi() });
    }
    let (lo, hi) = (lo.max(f.lo()), hi.min(f.hi()));
    if hi - lo <= tol_x {
        return Ok(f.clone());
    }
    let (free_lo, free_hi) = (lo - f.lo() <= tol_x, f.hi() - hi <= tol_x);
    let fz = f.eval(z);
    let slope = match (free_lo, free_hi) {
        (false, false) => f.chord(lo, hi).slope,
        (true, false) if (hi - z).abs() > tol_x => (f.eval(hi) - fz) / (hi - z),
        (false, true) if (z - lo).abs() > tol_x => (fz - f.eval(lo)) / (z - lo),
        _ => {
            let (left, right) = f.subdifferential(z);
            f.chord(lo, hi).slope.clamp(left.min(right), left.max(right))
        }
    };
    let line = Line::through(z, fz, slope);
    let scale = f.values().iter().fold(1.0f64, |m, v| m.max(v.abs()));
    for (end, free) in [(lo, free_lo), (hi, free_hi)] {
        let gap = (line.eval(end) - f.eval(end)).abs();
        if !free && gap > 1e-9 * scale {
            return Err(PwlError::ClosureGap { gap });
        }
    }
    let mut pts: Vec<(f64, f64)> = f.xs.iter().zip(&f.ys).filter(|(x, _)| **x < lo).map(|(x, y)| (*x, *y)).collect();
    pts.push((lo, if free_lo { line.eval(lo) } else { f.eval(lo) }));
    pts.push((hi, if free_hi { line.eval(hi) } else { f.eval(hi) }));
    pts.extend(f.xs.iter().zip(&f.ys).filter(|(x, _)| **x > hi).map(|(x, y)| (*x, *y)));
    PiecewiseLinear::from_points(&pts)
}
