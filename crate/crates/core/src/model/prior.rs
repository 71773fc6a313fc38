//! One-dimensional state distributions with closed-form mass, partial
//! expectation and CDF-integral queries.
//!
//! Uniforms and mixtures of uniforms are stored as piecewise-linear CDFs, so
//! only two numeric representations exist internally.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::erf::erfc;

use super::ModelError;

/// Family tag, kept for reporting and serialization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PriorKind {
    Uniform,
    TruncatedGaussian,
    MixtureOfUniforms,
    PiecewiseLinearCdf,
}

#[derive(Debug, Clone, PartialEq)]
struct PlCdf {
    z: Vec<f64>,
    f: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
struct TruncGauss {
    mu: f64,
    sigma: f64,
    lo: f64,
    hi: f64,
    phi_lo: f64,
    norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
enum Repr {
    Pl(PlCdf),
    Gauss(TruncGauss),
}

/// Absolutely continuous distribution on a bounded interval `[lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Prior {
    kind: PriorKind,
    repr: Repr,
    mean: f64,
}

fn std_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

fn std_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

impl PlCdf {
    fn new(points: &[(f64, f64)]) -> Result<Self, ModelError> {
        if points.len() < 2 {
            return Err(ModelError::InvalidPrior("need at least two CDF points".into()));
        }
        let z: Vec<f64> = points.iter().map(|p| p.0).collect();
        let f: Vec<f64> = points.iter().map(|p| p.1).collect();
        if z.iter().chain(f.iter()).any(|v| !v.is_finite()) {
            return Err(ModelError::InvalidPrior("non-finite CDF point".into()));
        }
        if z.windows(2).any(|w| w[1] <= w[0]) {
            return Err(ModelError::InvalidPrior("CDF abscissae must increase strictly".into()));
        }
        if f.windows(2).any(|w| w[1] < w[0]) {
            return Err(ModelError::InvalidPrior("CDF values must be nondecreasing".into()));
        }
        if f[0].abs() > 1e-12 || (f[f.len() - 1] - 1.0).abs() > 1e-12 {
            return Err(ModelError::InvalidPrior("CDF must run from 0 to 1".into()));
        }
        let mut f = f;
        f[0] = 0.0;
        let last = f.len() - 1;
        f[last] = 1.0;
        Ok(Self { z, f })
    }

    fn lo(&self) -> f64 {
        self.z[0]
    }

    fn hi(&self) -> f64 {
        self.z[self.z.len() - 1]
    }

    /// Index `k` with `z[k] <= x < z[k+1]`, clamped to the last segment.
    fn segment(&self, x: f64) -> usize {
        let n = self.z.len();
        match self.z.partition_point(|&v| v <= x) {
            0 => 0,
            p if p >= n => n - 2,
            p => p - 1,
        }
    }

    fn density_on(&self, k: usize) -> f64 {
        (self.f[k + 1] - self.f[k]) / (self.z[k + 1] - self.z[k])
    }

    fn cdf(&self, x: f64) -> f64 {
        if x <= self.lo() {
            return 0.0;
        }
        if x >= self.hi() {
            return 1.0;
        }
        let k = self.segment(x);
        self.f[k] + self.density_on(k) * (x - self.z[k])
    }

    fn inv_cdf(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return self.lo();
        }
        if u >= 1.0 {
            // Smallest point where the CDF reaches one.
            let k = self.f.iter().position(|&v| v >= 1.0).unwrap_or(self.f.len() - 1);
            return self.z[k];
        }
        // First segment whose upper CDF value reaches u and carries mass.
        let mut k = self.f.partition_point(|&v| v < u).max(1) - 1;
        while k + 1 < self.z.len() && self.f[k + 1] <= self.f[k] {
            k += 1;
        }
        let k = k.min(self.z.len() - 2);
        let dens = self.density_on(k);
        if dens <= 0.0 {
            return self.z[k];
        }
        (self.z[k] + (u - self.f[k]) / dens).clamp(self.z[k], self.z[k + 1])
    }

    fn partial_expectation(&self, a: f64, b: f64) -> f64 {
        let (a, b) = (a.max(self.lo()), b.min(self.hi()));
        if b <= a {
            return 0.0;
        }
        let (ka, kb) = (self.segment(a), self.segment(b));
        let mut total = 0.0;
        for k in ka..=kb {
            let x1 = a.max(self.z[k]);
            let x2 = b.min(self.z[k + 1]);
            if x2 > x1 {
                total += self.density_on(k) * 0.5 * (x2 - x1) * (x2 + x1);
            }
        }
        total
    }
}

impl TruncGauss {
    fn new(mu: f64, sigma: f64, lo: f64, hi: f64) -> Result<Self, ModelError> {
        if !(sigma > 0.0 && sigma.is_finite() && mu.is_finite()) {
            return Err(ModelError::InvalidPrior("gaussian needs finite mean and std > 0".into()));
        }
        let phi_lo = std_cdf((lo - mu) / sigma);
        let norm = std_cdf((hi - mu) / sigma) - phi_lo;
        if !(norm > 1e-300) {
            return Err(ModelError::InvalidPrior("truncation leaves no probability mass".into()));
        }
        Ok(Self { mu, sigma, lo, hi, phi_lo, norm })
    }

    fn std(&self, x: f64) -> f64 {
        (x - self.mu) / self.sigma
    }

    fn cdf(&self, x: f64) -> f64 {
        if x <= self.lo {
            return 0.0;
        }
        if x >= self.hi {
            return 1.0;
        }
        ((std_cdf(self.std(x)) - self.phi_lo) / self.norm).clamp(0.0, 1.0)
    }

    fn density(&self, x: f64) -> f64 {
        if x < self.lo || x > self.hi {
            return 0.0;
        }
        std_pdf(self.std(x)) / (self.sigma * self.norm)
    }

    fn inv_cdf(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return self.lo;
        }
        if u >= 1.0 {
            return self.hi;
        }
        let target = (self.phi_lo + u * self.norm).clamp(1e-300, 1.0 - 1e-16);
        let guess = self.mu + self.sigma * Normal::standard().inverse_cdf(target);
        let (mut a, mut b) = (self.lo, self.hi);
        let mut x = if guess.is_finite() { guess.clamp(a, b) } else { 0.5 * (a + b) };
        // Safeguarded Newton: keep a bracket and fall back to bisection.
        for _ in 0..200 {
            let g = self.cdf(x) - u;
            if g.abs() <= 1e-15 {
                break;
            }
            if g > 0.0 {
                b = x;
            } else {
                a = x;
            }
            let d = self.density(x);
            let mut next = if d > 0.0 { x - g / d } else { f64::NAN };
            if !(next > a && next < b) {
                next = 0.5 * (a + b);
            }
            if (next - x).abs() <= 1e-15 * (1.0 + x.abs()) {
                x = next;
                break;
            }
            x = next;
        }
        x
    }

    fn partial_expectation(&self, a: f64, b: f64) -> f64 {
        let (a, b) = (a.max(self.lo), b.min(self.hi));
        if b <= a {
            return 0.0;
        }
        let (sa, sb) = (self.std(a), self.std(b));
        (self.mu * (std_cdf(sb) - std_cdf(sa)) - self.sigma * (std_pdf(sb) - std_pdf(sa))) / self.norm
    }
}

impl Prior {
    fn from_repr(kind: PriorKind, repr: Repr) -> Self {
        let mut prior = Self { kind, repr, mean: 0.0 };
        prior.mean = prior.partial_expectation(prior.lo(), prior.hi());
        prior
    }

    /// Uniform distribution on `[lo, hi]`.
    pub fn uniform(lo: f64, hi: f64) -> Result<Self, ModelError> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(ModelError::InvalidPrior(format!("bad uniform support [{lo}, {hi}]")));
        }
        let pl = PlCdf::new(&[(lo, 0.0), (hi, 1.0)])?;
        Ok(Self::from_repr(PriorKind::Uniform, Repr::Pl(pl)))
    }

    /// Gaussian with the given location and scale, truncated to `[lo, hi]`.
    pub fn truncated_gaussian(mean: f64, std: f64, lo: f64, hi: f64) -> Result<Self, ModelError> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(ModelError::InvalidPrior(format!("bad gaussian support [{lo}, {hi}]")));
        }
        let g = TruncGauss::new(mean, std, lo, hi)?;
        Ok(Self::from_repr(PriorKind::TruncatedGaussian, Repr::Gauss(g)))
    }

    /// Finite mixture of uniforms given as `(weight, lo, hi)`; weights are normalized.
    pub fn mixture_of_uniforms(components: &[(f64, f64, f64)]) -> Result<Self, ModelError> {
        if components.is_empty() {
            return Err(ModelError::InvalidPrior("empty mixture".into()));
        }
        let total: f64 = components.iter().map(|c| c.0).sum();
        if components.iter().any(|c| !(c.0 >= 0.0) || !(c.1 < c.2)) || !(total > 0.0) {
            return Err(ModelError::InvalidPrior("mixture needs nonnegative weights and lo < hi".into()));
        }
        let mut knots: Vec<f64> = components.iter().flat_map(|c| [c.1, c.2]).collect();
        knots.sort_by(f64::total_cmp);
        knots.dedup();
        let cdf_at = |x: f64| -> f64 {
            components
                .iter()
                .map(|&(w, a, b)| w / total * ((x - a) / (b - a)).clamp(0.0, 1.0))
                .sum()
        };
        let mut points: Vec<(f64, f64)> = knots.iter().map(|&x| (x, cdf_at(x))).collect();
        points[0].1 = 0.0;
        let last = points.len() - 1;
        points[last].1 = 1.0;
        for i in 1..points.len() {
            points[i].1 = points[i].1.max(points[i - 1].1);
        }
        let pl = PlCdf::new(&points)?;
        Ok(Self::from_repr(PriorKind::MixtureOfUniforms, Repr::Pl(pl)))
    }

    /// Distribution whose CDF interpolates `(z, F(z))` points linearly.
    pub fn piecewise_linear_cdf(points: &[(f64, f64)]) -> Result<Self, ModelError> {
        let pl = PlCdf::new(points)?;
        Ok(Self::from_repr(PriorKind::PiecewiseLinearCdf, Repr::Pl(pl)))
    }

    pub fn kind(&self) -> PriorKind {
        self.kind
    }

    pub fn lo(&self) -> f64 {
        match &self.repr {
            Repr::Pl(p) => p.lo(),
            Repr::Gauss(g) => g.lo,
        }
    }

    pub fn hi(&self) -> f64 {
        match &self.repr {
            Repr::Pl(p) => p.hi(),
            Repr::Gauss(g) => g.hi,
        }
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match &self.repr {
            Repr::Pl(p) => p.cdf(x),
            Repr::Gauss(g) => g.cdf(x),
        }
    }

    /// Density, taking the right-hand value at CDF knots.
    pub fn density(&self, x: f64) -> f64 {
        match &self.repr {
            Repr::Pl(p) => {
                if x < p.lo() || x > p.hi() {
                    0.0
                } else {
                    p.density_on(p.segment(x))
                }
            }
            Repr::Gauss(g) => g.density(x),
        }
    }

    /// Generalized inverse `inf { z : F(z) >= u }`.
    pub fn inv_cdf(&self, u: f64) -> f64 {
        match &self.repr {
            Repr::Pl(p) => p.inv_cdf(u),
            Repr::Gauss(g) => g.inv_cdf(u),
        }
    }

    /// `P(a <= S <= b)`.
    pub fn mass(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        (self.cdf(b) - self.cdf(a)).max(0.0)
    }

    /// `∫_a^b z dF(z)`.
    pub fn partial_expectation(&self, a: f64, b: f64) -> f64 {
        match &self.repr {
            Repr::Pl(p) => p.partial_expectation(a, b),
            Repr::Gauss(g) => g.partial_expectation(a, b),
        }
    }

    /// `E[S | a <= S <= b]`; for a massless cell the midpoint clamped to the support.
    pub fn conditional_mean(&self, a: f64, b: f64) -> f64 {
        let m = self.mass(a, b);
        if m > 1e-14 {
            (self.partial_expectation(a, b) / m).clamp(a.max(self.lo()), b.min(self.hi()))
        } else {
            (0.5 * (a + b)).clamp(self.lo(), self.hi())
        }
    }

    /// `∫_lo^s F(z) dz`.
    pub fn cdf_integral(&self, s: f64) -> f64 {
        if s <= self.lo() {
            return 0.0;
        }
        let t = s.min(self.hi());
        let inside = t * self.cdf(t) - self.partial_expectation(self.lo(), t);
        inside + (s - t).max(0.0)
    }

    /// `∫_0^u F^{-1}(v) dv`, the lower-quantile integral.
    pub fn quantile_integral(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        if u >= 1.0 {
            return self.mean;
        }
        self.partial_expectation(self.lo(), self.inv_cdf(u))
    }

    /// CDF knots for piecewise-linear priors; empty for smooth families.
    pub fn knots(&self) -> Vec<f64> {
        match &self.repr {
            Repr::Pl(p) => p.z.clone(),
            Repr::Gauss(_) => Vec::new(),
        }
    }
}
