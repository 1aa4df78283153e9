//! Probability density catalog behind a name-keyed registry.
//!
//! Every family implements the [`Pdf`] trait: pointwise evaluators plus the
//! metadata the rest of the crate needs (support, a declared finite sup bound,
//! jump locations, optional closed-form entropy). Families are registered by
//! name in a [`DensityRegistry`], so configs and the CLI can request
//! `{"family": "pareto", "params": [2.0, 1.0]}` without compile-time wiring.
//!
//! All catalog members are normalized probability densities; the test suite
//! re-checks `∫ p = 1` by quadrature for every member.

use crate::quadrature::TailTransform;
use crate::{Error, Interval, Result};
use once_cell::sync::Lazy;
use statrs::function::erf::erf;
use statrs::function::gamma::{digamma, gamma_lr, ln_gamma};
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

/// Pointwise density evaluators plus declared metadata.
pub trait Pdf: Send + Sync {
    fn pdf(&self, y: f64) -> f64;
    /// Natural log of the density; `-inf` outside the support.
    fn log_pdf(&self, y: f64) -> f64;
    fn cdf(&self, y: f64) -> f64;
    fn support(&self) -> Interval;
    /// A finite upper bound on the density (not necessarily tight).
    fn sup_bound(&self) -> f64;
    /// Jump locations of the density, always finitely many.
    fn discontinuities(&self) -> Vec<f64> {
        Vec::new()
    }
    /// Locations quadrature should seed panels at (modes, kinks, jumps).
    fn panel_hints(&self) -> Vec<f64> {
        self.discontinuities()
    }
    fn analytic_entropy(&self) -> Option<f64> {
        None
    }
    /// Known closed-form moments, keyed by moment-function name.
    fn analytic_moments(&self) -> Vec<(&'static str, f64)> {
        Vec::new()
    }
    /// Change of variables that tames this density's tails under quadrature.
    /// Power-law tails heavier than `y^-2` want the exponential map; the
    /// rational map leaves them with an endpoint singularity.
    fn preferred_tail_transform(&self) -> TailTransform {
        TailTransform::Rational
    }
    fn family(&self) -> &'static str;
    fn params(&self) -> Vec<f64>;
}

/// A shared, immutable density.
#[derive(Clone)]
pub struct Density(Arc<dyn Pdf>);

impl Density {
    pub fn from_pdf(p: impl Pdf + 'static) -> Self {
        Density(Arc::new(p))
    }

    pub fn pdf(&self, y: f64) -> f64 {
        self.0.pdf(y)
    }
    pub fn log_pdf(&self, y: f64) -> f64 {
        self.0.log_pdf(y)
    }
    pub fn cdf(&self, y: f64) -> f64 {
        self.0.cdf(y)
    }
    pub fn support(&self) -> Interval {
        self.0.support()
    }
    pub fn sup_bound(&self) -> f64 {
        self.0.sup_bound()
    }
    pub fn discontinuities(&self) -> Vec<f64> {
        self.0.discontinuities()
    }
    pub fn panel_hints(&self) -> Vec<f64> {
        self.0.panel_hints()
    }
    pub fn analytic_entropy(&self) -> Option<f64> {
        self.0.analytic_entropy()
    }
    pub fn analytic_moments(&self) -> Vec<(&'static str, f64)> {
        self.0.analytic_moments()
    }
    pub fn preferred_tail_transform(&self) -> TailTransform {
        self.0.preferred_tail_transform()
    }
    pub fn family(&self) -> &'static str {
        self.0.family()
    }
    pub fn params(&self) -> Vec<f64> {
        self.0.params()
    }

    /// Density of `Y + c`.
    pub fn shift(&self, c: f64) -> Density {
        if c == 0.0 {
            return self.clone();
        }
        Density::from_pdf(Shifted {
            base: self.clone(),
            offset: c,
        })
    }

    /// Quantile by bisection on the CDF. `p` must lie in (0, 1).
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&p) || p == 0.0 || p == 1.0 {
            return Err(Error::InvalidInput(format!(
                "quantile level must lie strictly inside (0,1), got {p}"
            )));
        }
        let sup = self.support();
        let mut lo = if sup.lo.is_finite() { sup.lo } else { -1.0 };
        let mut hi = if sup.hi.is_finite() { sup.hi } else { 1.0 };
        let mut guard = 0;
        while self.cdf(lo) > p {
            lo = if lo >= 0.0 { -1.0 } else { lo * 2.0 };
            guard += 1;
            if guard > 2200 {
                return Err(Error::InvalidInput("quantile bracket failed".into()));
            }
        }
        while self.cdf(hi) < p {
            hi = if hi <= 0.0 { 1.0 } else { hi * 2.0 };
            guard += 1;
            if guard > 4400 {
                return Err(Error::InvalidInput("quantile bracket failed".into()));
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if !(mid > lo && mid < hi) {
                break;
            }
            if self.cdf(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

impl std::fmt::Debug for Density {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}{:?}", self.family(), self.params())
    }
}

// ---------------------------------------------------------------------------
// Catalog families
// ---------------------------------------------------------------------------

struct Gaussian {
    mu: f64,
    sigma: f64,
    // ln(σ√2π), cached: log_pdf sits inside mixture entropy integrands where
    // a per-call ln() is measurable.
    ln_norm: f64,
}

impl Gaussian {
    fn new(mu: f64, sigma: f64) -> Self {
        Gaussian {
            mu,
            sigma,
            ln_norm: (sigma * (2.0 * PI).sqrt()).ln(),
        }
    }
}

impl Pdf for Gaussian {
    fn pdf(&self, y: f64) -> f64 {
        let z = (y - self.mu) / self.sigma;
        (-0.5 * z * z).exp() / (self.sigma * (2.0 * PI).sqrt())
    }
    fn log_pdf(&self, y: f64) -> f64 {
        let z = (y - self.mu) / self.sigma;
        -0.5 * z * z - self.ln_norm
    }
    fn cdf(&self, y: f64) -> f64 {
        0.5 * (1.0 + erf((y - self.mu) / (self.sigma * 2.0f64.sqrt())))
    }
    fn support(&self) -> Interval {
        Interval::real_line()
    }
    fn sup_bound(&self) -> f64 {
        1.0 / (self.sigma * (2.0 * PI).sqrt())
    }
    fn panel_hints(&self) -> Vec<f64> {
        vec![self.mu]
    }
    fn analytic_entropy(&self) -> Option<f64> {
        Some(0.5 * (2.0 * PI * std::f64::consts::E * self.sigma * self.sigma).ln())
    }
    fn family(&self) -> &'static str {
        "gaussian"
    }
    fn params(&self) -> Vec<f64> {
        vec![self.mu, self.sigma]
    }
}

struct Cauchy {
    x0: f64,
    gamma: f64,
}

impl Pdf for Cauchy {
    fn pdf(&self, y: f64) -> f64 {
        let z = (y - self.x0) / self.gamma;
        1.0 / (PI * self.gamma * (1.0 + z * z))
    }
    fn log_pdf(&self, y: f64) -> f64 {
        let z = (y - self.x0) / self.gamma;
        -(PI * self.gamma).ln() - (z * z).ln_1p()
    }
    fn cdf(&self, y: f64) -> f64 {
        0.5 + ((y - self.x0) / self.gamma).atan() / PI
    }
    fn support(&self) -> Interval {
        Interval::real_line()
    }
    fn sup_bound(&self) -> f64 {
        1.0 / (PI * self.gamma)
    }
    fn panel_hints(&self) -> Vec<f64> {
        vec![self.x0]
    }
    fn analytic_entropy(&self) -> Option<f64> {
        Some((4.0 * PI * self.gamma).ln())
    }
    fn analytic_moments(&self) -> Vec<(&'static str, f64)> {
        if self.x0 == 0.0 && self.gamma == 1.0 {
            // E[ln(1 + Y²)] for the standard Cauchy.
            vec![("log1p_sq", 4.0f64.ln())]
        } else {
            Vec::new()
        }
    }
    fn family(&self) -> &'static str {
        "cauchy"
    }
    fn params(&self) -> Vec<f64> {
        vec![self.x0, self.gamma]
    }
}

/// Uniform on the right-open interval `[a, b)`.
struct Uniform {
    a: f64,
    b: f64,
}

impl Pdf for Uniform {
    fn pdf(&self, y: f64) -> f64 {
        if y >= self.a && y < self.b {
            1.0 / (self.b - self.a)
        } else {
            0.0
        }
    }
    fn log_pdf(&self, y: f64) -> f64 {
        if y >= self.a && y < self.b {
            -(self.b - self.a).ln()
        } else {
            f64::NEG_INFINITY
        }
    }
    fn cdf(&self, y: f64) -> f64 {
        ((y - self.a) / (self.b - self.a)).clamp(0.0, 1.0)
    }
    fn support(&self) -> Interval {
        Interval::new(self.a, self.b)
    }
    fn sup_bound(&self) -> f64 {
        1.0 / (self.b - self.a)
    }
    fn discontinuities(&self) -> Vec<f64> {
        vec![self.a, self.b]
    }
    fn analytic_entropy(&self) -> Option<f64> {
        Some((self.b - self.a).ln())
    }
    fn family(&self) -> &'static str {
        "uniform"
    }
    fn params(&self) -> Vec<f64> {
        vec![self.a, self.b]
    }
}

/// Pareto with shape `a` and scale (left endpoint) `s`.
struct Pareto {
    shape: f64,
    scale: f64,
}

impl Pdf for Pareto {
    fn pdf(&self, y: f64) -> f64 {
        if y < self.scale {
            return 0.0;
        }
        self.shape * (self.scale / y).powf(self.shape) / y
    }
    fn log_pdf(&self, y: f64) -> f64 {
        if y < self.scale {
            return f64::NEG_INFINITY;
        }
        self.shape.ln() + self.shape * (self.scale.ln() - y.ln()) - y.ln()
    }
    fn cdf(&self, y: f64) -> f64 {
        if y <= self.scale {
            0.0
        } else {
            1.0 - (self.scale / y).powf(self.shape)
        }
    }
    fn support(&self) -> Interval {
        Interval::new(self.scale, f64::INFINITY)
    }
    fn sup_bound(&self) -> f64 {
        self.shape / self.scale
    }
    fn discontinuities(&self) -> Vec<f64> {
        vec![self.scale]
    }
    fn analytic_entropy(&self) -> Option<f64> {
        Some((self.scale / self.shape).ln() + 1.0 / self.shape + 1.0)
    }
    fn preferred_tail_transform(&self) -> TailTransform {
        // Pure power tail: the exponential map turns y^-(a+1) into e^-aw.
        TailTransform::Exponential
    }
    fn family(&self) -> &'static str {
        "pareto"
    }
    fn params(&self) -> Vec<f64> {
        vec![self.shape, self.scale]
    }
}

/// Gamma with shape `k ≥ 1` (boundedness) and scale `θ`.
struct Gamma {
    shape: f64,
    scale: f64,
}

impl Pdf for Gamma {
    fn pdf(&self, y: f64) -> f64 {
        if y < 0.0 || !y.is_finite() {
            return 0.0;
        }
        self.log_pdf(y).exp()
    }
    fn log_pdf(&self, y: f64) -> f64 {
        if y < 0.0 || !y.is_finite() {
            return f64::NEG_INFINITY;
        }
        if y == 0.0 {
            return if self.shape == 1.0 {
                -self.scale.ln()
            } else {
                f64::NEG_INFINITY
            };
        }
        (self.shape - 1.0) * y.ln()
            - y / self.scale
            - ln_gamma(self.shape)
            - self.shape * self.scale.ln()
    }
    fn cdf(&self, y: f64) -> f64 {
        if y <= 0.0 {
            0.0
        } else if !y.is_finite() {
            1.0
        } else {
            gamma_lr(self.shape, y / self.scale)
        }
    }
    fn support(&self) -> Interval {
        Interval::new(0.0, f64::INFINITY)
    }
    fn sup_bound(&self) -> f64 {
        if self.shape == 1.0 {
            1.0 / self.scale
        } else {
            self.pdf((self.shape - 1.0) * self.scale)
        }
    }
    fn discontinuities(&self) -> Vec<f64> {
        if self.shape == 1.0 {
            vec![0.0]
        } else {
            Vec::new()
        }
    }
    fn panel_hints(&self) -> Vec<f64> {
        let mut h = self.discontinuities();
        h.push((self.shape - 1.0).max(0.0) * self.scale);
        h
    }
    fn analytic_entropy(&self) -> Option<f64> {
        Some(
            self.shape
                + self.scale.ln()
                + ln_gamma(self.shape)
                + (1.0 - self.shape) * digamma(self.shape),
        )
    }
    fn family(&self) -> &'static str {
        "gamma"
    }
    fn params(&self) -> Vec<f64> {
        vec![self.shape, self.scale]
    }
}

/// Generalized Gaussian: `β/(2αΓ(1/β)) exp(−(|y−μ|/α)^β)`.
struct GenGaussian {
    mu: f64,
    alpha: f64,
    beta: f64,
}

impl GenGaussian {
    fn log_norm(&self) -> f64 {
        self.beta.ln() - (2.0 * self.alpha).ln() - ln_gamma(1.0 / self.beta)
    }
}

impl Pdf for GenGaussian {
    fn pdf(&self, y: f64) -> f64 {
        self.log_pdf(y).exp()
    }
    fn log_pdf(&self, y: f64) -> f64 {
        let z = (y - self.mu).abs() / self.alpha;
        if !z.is_finite() {
            return f64::NEG_INFINITY;
        }
        self.log_norm() - z.powf(self.beta)
    }
    fn cdf(&self, y: f64) -> f64 {
        let z = (y - self.mu).abs() / self.alpha;
        let x = z.powf(self.beta);
        // gamma_lr rejects the closed endpoints of (0, inf).
        let half_tail = if x == 0.0 {
            0.5
        } else if !x.is_finite() {
            0.0
        } else {
            0.5 * (1.0 - gamma_lr(1.0 / self.beta, x))
        };
        if y >= self.mu {
            1.0 - half_tail
        } else {
            half_tail
        }
    }
    fn support(&self) -> Interval {
        Interval::real_line()
    }
    fn sup_bound(&self) -> f64 {
        self.log_norm().exp()
    }
    fn panel_hints(&self) -> Vec<f64> {
        vec![self.mu]
    }
    fn analytic_entropy(&self) -> Option<f64> {
        Some(1.0 / self.beta - self.log_norm())
    }
    fn family(&self) -> &'static str {
        "gen_gaussian"
    }
    fn params(&self) -> Vec<f64> {
        vec![self.mu, self.alpha, self.beta]
    }
}

/// Symmetric triangular density on `[a, b]`, the convolution of two equal
/// uniforms; used by the channel composition tests.
struct Triangular {
    a: f64,
    b: f64,
}

impl Pdf for Triangular {
    fn pdf(&self, y: f64) -> f64 {
        let w = self.b - self.a;
        let m = 0.5 * (self.a + self.b);
        if y < self.a || y > self.b {
            0.0
        } else {
            (2.0 / w) * (1.0 - (y - m).abs() / (0.5 * w))
        }
    }
    fn log_pdf(&self, y: f64) -> f64 {
        let p = self.pdf(y);
        if p > 0.0 {
            p.ln()
        } else {
            f64::NEG_INFINITY
        }
    }
    fn cdf(&self, y: f64) -> f64 {
        let w = self.b - self.a;
        let m = 0.5 * (self.a + self.b);
        if y <= self.a {
            0.0
        } else if y >= self.b {
            1.0
        } else if y <= m {
            let t = (y - self.a) / (0.5 * w);
            0.5 * t * t
        } else {
            let t = (self.b - y) / (0.5 * w);
            1.0 - 0.5 * t * t
        }
    }
    fn support(&self) -> Interval {
        Interval::new(self.a, self.b)
    }
    fn sup_bound(&self) -> f64 {
        2.0 / (self.b - self.a)
    }
    fn panel_hints(&self) -> Vec<f64> {
        vec![self.a, 0.5 * (self.a + self.b), self.b]
    }
    fn analytic_entropy(&self) -> Option<f64> {
        Some(0.5 + (0.5 * (self.b - self.a)).ln())
    }
    fn family(&self) -> &'static str {
        "triangular"
    }
    fn params(&self) -> Vec<f64> {
        vec![self.a, self.b]
    }
}

struct Mixture {
    weights: Vec<f64>,
    log_weights: Vec<f64>,
    components: Vec<Density>,
}

impl Pdf for Mixture {
    fn pdf(&self, y: f64) -> f64 {
        self.weights
            .iter()
            .zip(&self.components)
            .map(|(w, c)| w * c.pdf(y))
            .sum()
    }
    fn log_pdf(&self, y: f64) -> f64 {
        // Streaming log-sum-exp over ln wᵢ + ln pᵢ(y): stable far in the
        // tails, no per-call allocation. Terms 46 nats under the running
        // maximum are dropped; they move the sum by under one part in 1e19.
        let mut m = f64::NEG_INFINITY;
        let mut s = 0.0;
        for (lw, c) in self.log_weights.iter().zip(&self.components) {
            let t = lw + c.log_pdf(y);
            if t > m {
                s = if m.is_finite() {
                    1.0 + s * (m - t).exp()
                } else {
                    1.0
                };
                m = t;
            } else if t > m - 46.0 {
                s += (t - m).exp();
            }
        }
        if m == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        m + s.ln()
    }
    fn cdf(&self, y: f64) -> f64 {
        self.weights
            .iter()
            .zip(&self.components)
            .map(|(w, c)| w * c.cdf(y))
            .sum()
    }
    fn support(&self) -> Interval {
        self.components
            .iter()
            .map(|c| c.support())
            .reduce(|a, b| a.hull(&b))
            .unwrap()
    }
    fn sup_bound(&self) -> f64 {
        // Conservative: Σ wᵢ Mᵢ.
        self.weights
            .iter()
            .zip(&self.components)
            .map(|(w, c)| w * c.sup_bound())
            .sum()
    }
    fn discontinuities(&self) -> Vec<f64> {
        let mut d: Vec<f64> = self
            .components
            .iter()
            .flat_map(|c| c.discontinuities())
            .collect();
        d.sort_by(|a, b| a.partial_cmp(b).unwrap());
        d.dedup();
        d
    }
    fn panel_hints(&self) -> Vec<f64> {
        let mut h: Vec<f64> = self
            .components
            .iter()
            .flat_map(|c| c.panel_hints())
            .collect();
        h.extend(self.discontinuities());
        h.sort_by(|a, b| a.partial_cmp(b).unwrap());
        h.dedup();
        h
    }
    fn preferred_tail_transform(&self) -> TailTransform {
        if self
            .components
            .iter()
            .any(|c| c.preferred_tail_transform() == TailTransform::Exponential)
        {
            TailTransform::Exponential
        } else {
            TailTransform::Rational
        }
    }
    fn family(&self) -> &'static str {
        "mixture"
    }
    fn params(&self) -> Vec<f64> {
        self.weights.clone()
    }
}

/// Density of `Y + offset` for `Y ~ base`.
struct Shifted {
    base: Density,
    offset: f64,
}

impl Pdf for Shifted {
    fn pdf(&self, y: f64) -> f64 {
        self.base.pdf(y - self.offset)
    }
    fn log_pdf(&self, y: f64) -> f64 {
        self.base.log_pdf(y - self.offset)
    }
    fn cdf(&self, y: f64) -> f64 {
        self.base.cdf(y - self.offset)
    }
    fn support(&self) -> Interval {
        self.base.support().shift(self.offset)
    }
    fn sup_bound(&self) -> f64 {
        self.base.sup_bound()
    }
    fn discontinuities(&self) -> Vec<f64> {
        self.base
            .discontinuities()
            .iter()
            .map(|d| d + self.offset)
            .collect()
    }
    fn panel_hints(&self) -> Vec<f64> {
        self.base
            .panel_hints()
            .iter()
            .map(|d| d + self.offset)
            .collect()
    }
    fn analytic_entropy(&self) -> Option<f64> {
        // Differential entropy is shift invariant.
        self.base.analytic_entropy()
    }
    fn preferred_tail_transform(&self) -> TailTransform {
        self.base.preferred_tail_transform()
    }
    fn family(&self) -> &'static str {
        "shifted"
    }
    fn params(&self) -> Vec<f64> {
        let mut p = vec![self.offset];
        p.extend(self.base.params());
        p
    }
}

/// Identical law, extra quadrature seeds. Mixtures of components shifted far
/// apart concentrate mass in slivers a coarse initial panel never samples;
/// the extra hints pin panels onto each sliver.
struct WithHints {
    base: Density,
    extra: Vec<f64>,
}

impl Pdf for WithHints {
    fn pdf(&self, y: f64) -> f64 {
        self.base.pdf(y)
    }
    fn log_pdf(&self, y: f64) -> f64 {
        self.base.log_pdf(y)
    }
    fn cdf(&self, y: f64) -> f64 {
        self.base.cdf(y)
    }
    fn support(&self) -> Interval {
        self.base.support()
    }
    fn sup_bound(&self) -> f64 {
        self.base.sup_bound()
    }
    fn discontinuities(&self) -> Vec<f64> {
        self.base.discontinuities()
    }
    fn panel_hints(&self) -> Vec<f64> {
        let mut h = self.base.panel_hints();
        h.extend_from_slice(&self.extra);
        h.retain(|v| v.is_finite());
        h.sort_by(f64::total_cmp);
        h.dedup();
        h
    }
    fn analytic_entropy(&self) -> Option<f64> {
        self.base.analytic_entropy()
    }
    fn analytic_moments(&self) -> Vec<(&'static str, f64)> {
        self.base.analytic_moments()
    }
    fn preferred_tail_transform(&self) -> TailTransform {
        self.base.preferred_tail_transform()
    }
    fn family(&self) -> &'static str {
        self.base.family()
    }
    fn params(&self) -> Vec<f64> {
        self.base.params()
    }
}

pub(crate) fn with_extra_hints(base: &Density, extra: Vec<f64>) -> Density {
    if extra.is_empty() {
        return base.clone();
    }
    Density::from_pdf(WithHints {
        base: base.clone(),
        extra,
    })
}

/// Density of `Z = m·Y` for `Y ~ base` and `m > 0`: `p_Z(z) = p(z/m)/m`.
pub(crate) struct Scaled {
    pub base: Density,
    pub m: f64,
}

impl Pdf for Scaled {
    fn pdf(&self, y: f64) -> f64 {
        self.base.pdf(y / self.m) / self.m
    }
    fn log_pdf(&self, y: f64) -> f64 {
        self.base.log_pdf(y / self.m) - self.m.ln()
    }
    fn cdf(&self, y: f64) -> f64 {
        self.base.cdf(y / self.m)
    }
    fn support(&self) -> Interval {
        self.base.support().scale(self.m)
    }
    fn sup_bound(&self) -> f64 {
        self.base.sup_bound() / self.m
    }
    fn discontinuities(&self) -> Vec<f64> {
        self.base
            .discontinuities()
            .iter()
            .map(|d| d * self.m)
            .collect()
    }
    fn panel_hints(&self) -> Vec<f64> {
        self.base.panel_hints().iter().map(|d| d * self.m).collect()
    }
    fn analytic_entropy(&self) -> Option<f64> {
        self.base.analytic_entropy().map(|h| h + self.m.ln())
    }
    fn preferred_tail_transform(&self) -> TailTransform {
        self.base.preferred_tail_transform()
    }
    fn family(&self) -> &'static str {
        "scaled"
    }
    fn params(&self) -> Vec<f64> {
        let mut p = vec![self.m];
        p.extend(self.base.params());
        p
    }
}

// ---------------------------------------------------------------------------
// Registry
// ---------------------------------------------------------------------------

fn require(cond: bool, name: &'static str, reason: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            reason: reason.to_string(),
        })
    }
}

fn expect_params(params: &[f64], n: usize, family: &str) -> Result<()> {
    if params.len() == n && params.iter().all(|p| p.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: "params",
            reason: format!("{family} takes {n} finite parameters, got {params:?}"),
        })
    }
}

/// Builder for one density family, registered by name.
pub trait DensityFamily: Send + Sync {
    fn family(&self) -> &'static str;
    /// Human-readable parameter list, for error messages and `--help` text.
    fn signature(&self) -> &'static str;
    fn build(&self, params: &[f64]) -> Result<Density>;
}

macro_rules! family {
    ($reg_name:ident, $fam:literal, $sig:literal, $params:ident => $body:expr) => {
        struct $reg_name;
        impl DensityFamily for $reg_name {
            fn family(&self) -> &'static str {
                $fam
            }
            fn signature(&self) -> &'static str {
                $sig
            }
            fn build(&self, $params: &[f64]) -> Result<Density> {
                $body
            }
        }
    };
}

family!(GaussianFamily, "gaussian", "[mu, sigma]", p => {
    expect_params(p, 2, "gaussian")?;
    require(p[1] > 0.0, "sigma", "must be positive")?;
    Ok(Density::from_pdf(Gaussian::new(p[0], p[1])))
});

family!(CauchyFamily, "cauchy", "[x0, gamma]", p => {
    expect_params(p, 2, "cauchy")?;
    require(p[1] > 0.0, "gamma", "must be positive")?;
    Ok(Density::from_pdf(Cauchy { x0: p[0], gamma: p[1] }))
});

family!(UniformFamily, "uniform", "[a, b]", p => {
    expect_params(p, 2, "uniform")?;
    require(p[1] > p[0], "b", "must exceed a")?;
    Ok(Density::from_pdf(Uniform { a: p[0], b: p[1] }))
});

family!(ParetoFamily, "pareto", "[shape, scale]", p => {
    expect_params(p, 2, "pareto")?;
    require(p[0] > 0.0, "shape", "must be positive")?;
    require(p[1] > 0.0, "scale", "must be positive")?;
    Ok(Density::from_pdf(Pareto { shape: p[0], scale: p[1] }))
});

family!(GammaFamily, "gamma", "[shape, scale]", p => {
    expect_params(p, 2, "gamma")?;
    require(p[0] >= 1.0, "shape", "must be >= 1 so the density stays bounded")?;
    require(p[1] > 0.0, "scale", "must be positive")?;
    Ok(Density::from_pdf(Gamma { shape: p[0], scale: p[1] }))
});

family!(GenGaussianFamily, "gen_gaussian", "[mu, alpha, beta]", p => {
    expect_params(p, 3, "gen_gaussian")?;
    require(p[1] > 0.0, "alpha", "must be positive")?;
    require(p[2] > 0.0, "beta", "must be positive")?;
    Ok(Density::from_pdf(GenGaussian { mu: p[0], alpha: p[1], beta: p[2] }))
});

family!(TriangularFamily, "triangular", "[a, b]", p => {
    expect_params(p, 2, "triangular")?;
    require(p[1] > p[0], "b", "must exceed a")?;
    Ok(Density::from_pdf(Triangular { a: p[0], b: p[1] }))
});

/// Name-keyed registry of density families.
pub struct DensityRegistry {
    map: BTreeMap<&'static str, Box<dyn DensityFamily>>,
}

impl DensityRegistry {
    pub fn empty() -> Self {
        DensityRegistry {
            map: BTreeMap::new(),
        }
    }

    /// Registry preloaded with the full catalog.
    pub fn builtin() -> Self {
        let mut r = DensityRegistry::empty();
        r.register(Box::new(GaussianFamily));
        r.register(Box::new(CauchyFamily));
        r.register(Box::new(UniformFamily));
        r.register(Box::new(ParetoFamily));
        r.register(Box::new(GammaFamily));
        r.register(Box::new(GenGaussianFamily));
        r.register(Box::new(TriangularFamily));
        r
    }

    pub fn register(&mut self, fam: Box<dyn DensityFamily>) {
        self.map.insert(fam.family(), fam);
    }

    pub fn build(&self, family: &str, params: &[f64]) -> Result<Density> {
        match self.map.get(family) {
            Some(f) => f.build(params),
            None => Err(Error::UnknownFamily(format!(
                "density family {family} (known: {})",
                self.families().collect::<Vec<_>>().join(", ")
            ))),
        }
    }

    pub fn families(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.map.keys().copied()
    }

    pub fn signature(&self, family: &str) -> Option<&'static str> {
        self.map.get(family).map(|f| f.signature())
    }
}

static BUILTIN: Lazy<DensityRegistry> = Lazy::new(DensityRegistry::builtin);

/// Build a catalog density by family name, e.g. `make_density("pareto", &[2.0, 1.0])`.
pub fn make_density(family: &str, params: &[f64]) -> Result<Density> {
    BUILTIN.build(family, params)
}

/// Convex combination of already-built densities.
pub fn mixture(components: Vec<(f64, Density)>) -> Result<Density> {
    if components.is_empty() {
        return Err(Error::InvalidInput(
            "mixture needs at least one component".into(),
        ));
    }
    let total: f64 = components.iter().map(|(w, _)| w).sum();
    if components.iter().any(|(w, _)| *w <= 0.0) {
        return Err(Error::InvalidInput(
            "mixture weights must be positive".into(),
        ));
    }
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidInput(format!(
            "mixture weights must sum to 1 (got {total})"
        )));
    }
    if components.len() == 1 {
        return Ok(components.into_iter().next().unwrap().1);
    }
    let (weights, comps): (Vec<f64>, Vec<Density>) = components.into_iter().unzip();
    let log_weights = weights.iter().map(|w| w.ln()).collect();
    Ok(Density::from_pdf(Mixture {
        weights,
        log_weights,
        components: comps,
    }))
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::quadrature::{integrate, QuadratureConfig};
    use crate::testutil::assert_close;

    pub(crate) fn catalog() -> Vec<Density> {
        vec![
            make_density("gaussian", &[0.0, 1.0]).unwrap(),
            make_density("gaussian", &[-2.0, 0.3]).unwrap(),
            make_density("cauchy", &[0.0, 1.0]).unwrap(),
            make_density("cauchy", &[5.0, 2.5]).unwrap(),
            make_density("uniform", &[0.0, 1.0]).unwrap(),
            make_density("uniform", &[-3.0, 4.0]).unwrap(),
            make_density("pareto", &[2.0, 1.0]).unwrap(),
            make_density("pareto", &[0.5, 3.0]).unwrap(),
            make_density("gamma", &[1.0, 2.0]).unwrap(),
            make_density("gamma", &[2.5, 0.7]).unwrap(),
            make_density("gen_gaussian", &[0.0, 1.0, 1.0]).unwrap(),
            make_density("gen_gaussian", &[1.0, 2.0, 4.0]).unwrap(),
            make_density("triangular", &[0.0, 2.0]).unwrap(),
            mixture(vec![
                (0.5, make_density("gaussian", &[0.0, 1.0]).unwrap()),
                (0.5, make_density("cauchy", &[0.0, 1.0]).unwrap()),
            ])
            .unwrap(),
            mixture(vec![
                (0.25, make_density("uniform", &[0.0, 1.0]).unwrap()),
                (0.75, make_density("uniform", &[2.0, 3.0]).unwrap()),
            ])
            .unwrap(),
        ]
    }

    #[test]
    fn every_catalog_member_normalizes() {
        for d in catalog() {
            let cfg = QuadratureConfig {
                tail_transform: d.preferred_tail_transform(),
                ..QuadratureConfig::default()
            };
            let bp = d.panel_hints();
            let r = integrate(|y| d.pdf(y), d.support(), &bp, &cfg).unwrap();
            assert!(r.converged, "{d:?} did not converge");
            assert_close(r.value, 1.0, 1e-8, &format!("normalization of {d:?}"));
        }
    }

    #[test]
    fn sup_bound_dominates_on_grid() {
        for d in catalog() {
            let m = d.sup_bound();
            assert!(m.is_finite() && m > 0.0);
            let s = d.support();
            let lo = if s.lo.is_finite() { s.lo } else { -50.0 };
            let hi = if s.hi.is_finite() { s.hi } else { 50.0 };
            for i in 0..=4000 {
                let y = lo + (hi - lo) * i as f64 / 4000.0;
                assert!(
                    d.pdf(y) <= m * (1.0 + 1e-12),
                    "{d:?}: pdf({y}) = {} exceeds declared bound {m}",
                    d.pdf(y)
                );
            }
        }
    }

    #[test]
    fn log_pdf_consistent_with_pdf() {
        for d in catalog() {
            for y in [-7.3, -1.0, 0.0, 0.4, 1.0, 2.7, 11.0] {
                let p = d.pdf(y);
                let lp = d.log_pdf(y);
                if p > 0.0 {
                    assert_close(lp, p.ln(), 1e-10, &format!("log_pdf of {d:?} at {y}"));
                } else {
                    // Outside the support lp is -inf; inside it may be a finite
                    // value whose exp underflowed to zero.
                    assert!(lp < -700.0, "{d:?} at {y}: pdf 0 but log_pdf {lp}");
                }
            }
        }
    }

    #[test]
    fn uniform_evaluates_and_reports_jumps() {
        let d = make_density("uniform", &[0.0, 1.0]).unwrap();
        assert_eq!(d.pdf(0.5), 1.0);
        assert_eq!(d.pdf(0.0), 1.0);
        assert_eq!(d.pdf(1.0), 0.0);
        assert_eq!(d.pdf(-0.1), 0.0);
        assert_eq!(d.sup_bound(), 1.0);
        assert_eq!(d.discontinuities(), vec![0.0, 1.0]);
    }

    #[test]
    fn cauchy_center_value_and_entropy() {
        let d = make_density("cauchy", &[0.0, 1.0]).unwrap();
        assert_close(d.pdf(0.0), 1.0 / PI, 1e-15, "cauchy mode");
        assert_close(
            d.analytic_entropy().unwrap(),
            (4.0 * PI).ln(),
            1e-15,
            "cauchy entropy",
        );
    }

    #[test]
    fn gaussian_moments_match_quadrature() {
        let d = make_density("gaussian", &[1.5, 2.0]).unwrap();
        let cfg = QuadratureConfig::default();
        let mean = integrate(|y| y * d.pdf(y), d.support(), &[1.5], &cfg).unwrap();
        assert_close(mean.value, 1.5, 1e-9, "gaussian mean");
        let var = integrate(|y| (y - 1.5).powi(2) * d.pdf(y), d.support(), &[1.5], &cfg).unwrap();
        assert_close(var.value, 4.0, 1e-8, "gaussian variance");
    }

    #[test]
    fn mixture_of_disjoint_uniforms() {
        let d = mixture(vec![
            (0.25, make_density("uniform", &[0.0, 1.0]).unwrap()),
            (0.75, make_density("uniform", &[2.0, 3.0]).unwrap()),
        ])
        .unwrap();
        assert_close(d.pdf(0.5), 0.25, 1e-15, "left slab");
        assert_close(d.pdf(2.5), 0.75, 1e-15, "right slab");
        assert_eq!(d.pdf(1.5), 0.0);
        assert_eq!(d.discontinuities(), vec![0.0, 1.0, 2.0, 3.0]);
    }

    #[test]
    fn single_component_mixture_collapses() {
        let g = make_density("gaussian", &[0.0, 1.0]).unwrap();
        let d = mixture(vec![(1.0, g.clone())]).unwrap();
        for y in [-2.0, 0.0, 0.7] {
            assert_eq!(d.pdf(y), g.pdf(y));
        }
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        assert!(matches!(
            make_density("gaussian", &[0.0, 0.0]),
            Err(Error::InvalidParameter { .. })
        ));
        assert!(matches!(
            make_density("uniform", &[1.0, 1.0]),
            Err(Error::InvalidParameter { .. })
        ));
        assert!(matches!(
            make_density("gamma", &[0.5, 1.0]),
            Err(Error::InvalidParameter { .. })
        ));
        assert!(matches!(
            make_density("gaussian", &[0.0]),
            Err(Error::InvalidParameter { .. })
        ));
        assert!(matches!(
            make_density("unknown_thing", &[1.0]),
            Err(Error::UnknownFamily(_))
        ));
    }

    #[test]
    fn mixture_weight_validation() {
        let g = make_density("gaussian", &[0.0, 1.0]).unwrap();
        assert!(mixture(vec![]).is_err());
        assert!(mixture(vec![(0.7, g.clone()), (0.2, g.clone())]).is_err());
        assert!(mixture(vec![(-0.5, g.clone()), (1.5, g.clone())]).is_err());
    }

    #[test]
    fn shift_moves_support_and_keeps_entropy() {
        let d = make_density("uniform", &[0.0, 1.0]).unwrap().shift(4.0);
        assert_eq!(d.pdf(4.5), 1.0);
        assert_eq!(d.pdf(0.5), 0.0);
        assert_eq!(d.support(), Interval::new(4.0, 5.0));
        assert_eq!(d.analytic_entropy(), Some(0.0));
    }

    #[test]
    fn quantiles_invert_cdf() {
        for d in catalog() {
            for p in [0.01, 0.25, 0.5, 0.75, 0.99] {
                let q = d.quantile(p).unwrap();
                assert_close(d.cdf(q), p, 1e-9, &format!("quantile of {d:?} at {p}"));
            }
        }
    }

    #[test]
    fn registry_lists_catalog() {
        let names: Vec<&str> = BUILTIN.families().collect();
        for expect in [
            "cauchy",
            "gamma",
            "gaussian",
            "gen_gaussian",
            "pareto",
            "triangular",
            "uniform",
        ] {
            assert!(names.contains(&expect), "missing {expect}");
        }
        assert_eq!(BUILTIN.signature("pareto"), Some("[shape, scale]"));
    }
}
