//! The constrained additive-noise channel Y = f(X) + N: distortion
//! functions, discrete input distributions, transition and output densities,
//! and mutual information via the entropy decomposition I = h_Y − h_N.
//!
//! Inputs are restricted to finite support so the output law is an exact
//! finite mixture and every integral inherits the quadrature guarantees;
//! the solver in the capacity module needs that finite-dimensional domain
//! anyway. The decomposition is spot-checked against the nested double
//! integral in the tests.

use crate::density::{mixture, Density};
use crate::entropy::differential_entropy;
use crate::moments::{moment_functional, MomentFunction};
use crate::quadrature::QuadratureConfig;
use crate::{Error, Result};
use once_cell::sync::Lazy;
use std::collections::BTreeMap;
use std::sync::Arc;

/// A deterministic input transformation x ↦ f(x) with declared regularity.
#[derive(Clone)]
pub struct DistortionFunction {
    name: String,
    eval: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    declared_continuous: bool,
    declared_absnondecreasing: bool,
}

impl DistortionFunction {
    pub fn new(
        name: impl Into<String>,
        eval: impl Fn(f64) -> f64 + Send + Sync + 'static,
        declared_continuous: bool,
        declared_absnondecreasing: bool,
    ) -> Self {
        DistortionFunction {
            name: name.into(),
            eval: Arc::new(eval),
            declared_continuous,
            declared_absnondecreasing,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.eval)(x)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn declared_continuous(&self) -> bool {
        self.declared_continuous
    }

    /// Whether |f| is declared non-decreasing in |x| (with |f| → ∞).
    pub fn declared_absnondecreasing(&self) -> bool {
        self.declared_absnondecreasing
    }

    /// Sampled check of the |f| monotonicity declaration on both sign
    /// branches over a geometric |x| grid.
    pub fn monotonicity_holds_on_grid(&self, x_max: f64, points: usize) -> bool {
        let mut grid = vec![0.0];
        let lo = 1e-6f64;
        let ratio = (x_max / lo).powf(1.0 / (points - 1) as f64);
        for i in 0..points {
            grid.push(lo * ratio.powi(i as i32));
        }
        for sign in [1.0, -1.0] {
            let mut prev = self.eval(0.0).abs();
            for &x in &grid[1..] {
                let cur = self.eval(sign * x).abs();
                if cur < prev * (1.0 - 1e-12) - 1e-12 {
                    return false;
                }
                prev = cur;
            }
        }
        true
    }
}

impl std::fmt::Debug for DistortionFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.name)
    }
}

// ---------------------------------------------------------------------------
// Distortion registry
// ---------------------------------------------------------------------------

/// Builder for one distortion kind, registered by name.
pub trait DistortionKind: Send + Sync {
    fn kind(&self) -> &'static str;
    fn signature(&self) -> &'static str;
    fn build(&self, params: &[f64]) -> Result<DistortionFunction>;
}

struct IdentityKind;

impl DistortionKind for IdentityKind {
    fn kind(&self) -> &'static str {
        "identity"
    }
    fn signature(&self) -> &'static str {
        "[]: f(x) = x"
    }
    fn build(&self, params: &[f64]) -> Result<DistortionFunction> {
        no_params(params, "identity")?;
        Ok(DistortionFunction::new("identity", |x| x, true, true))
    }
}

struct SignedExpKind;

impl DistortionKind for SignedExpKind {
    fn kind(&self) -> &'static str {
        "signed_exp"
    }
    fn signature(&self) -> &'static str {
        "[]: f(x) = sgn(x)(e^|x| - 1)"
    }
    fn build(&self, params: &[f64]) -> Result<DistortionFunction> {
        no_params(params, "signed_exp")?;
        Ok(DistortionFunction::new(
            "signed_exp",
            |x: f64| x.signum() * x.abs().exp_m1(),
            true,
            true,
        ))
    }
}

struct CubicKind;

impl DistortionKind for CubicKind {
    fn kind(&self) -> &'static str {
        "cubic"
    }
    fn signature(&self) -> &'static str {
        "[]: f(x) = x^3"
    }
    fn build(&self, params: &[f64]) -> Result<DistortionFunction> {
        no_params(params, "cubic")?;
        Ok(DistortionFunction::new("cubic", |x| x * x * x, true, true))
    }
}

struct ExprTableKind;

impl DistortionKind for ExprTableKind {
    fn kind(&self) -> &'static str {
        "expr-table"
    }
    fn signature(&self) -> &'static str {
        "[x0, y0, x1, y1, ...]: piecewise-linear through the knots"
    }
    fn build(&self, params: &[f64]) -> Result<DistortionFunction> {
        if params.len() < 4 || params.len() % 2 != 0 || params.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "params",
                reason: "expr-table takes an even list of at least 4 finite values".into(),
            });
        }
        let xs: Vec<f64> = params.iter().step_by(2).copied().collect();
        let ys: Vec<f64> = params.iter().skip(1).step_by(2).copied().collect();
        if xs.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter {
                name: "params",
                reason: "knot abscissae must be strictly increasing".into(),
            });
        }
        let table = Arc::new((xs, ys));
        let t = table.clone();
        let f = DistortionFunction::new(
            "expr-table",
            move |x: f64| {
                let (xs, ys) = t.as_ref();
                let n = xs.len();
                // Interior: linear interpolation; outside: extend the end
                // segments so the table defines f on all of R.
                let seg = match xs.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
                    Ok(i) => return ys[i],
                    Err(0) => 0,
                    Err(i) if i >= n => n - 2,
                    Err(i) => i - 1,
                };
                let slope = (ys[seg + 1] - ys[seg]) / (xs[seg + 1] - xs[seg]);
                ys[seg] + slope * (x - xs[seg])
            },
            true,
            false, // patched below from the sampled check
        );
        let span = table.0.iter().fold(1.0f64, |acc, x| acc.max(x.abs()));
        let monotone = f.monotonicity_holds_on_grid(span * 4.0, 512);
        Ok(DistortionFunction {
            declared_absnondecreasing: monotone,
            ..f
        })
    }
}

fn no_params(params: &[f64], kind: &str) -> Result<()> {
    if params.is_empty() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: "params",
            reason: format!("{kind} takes no parameters, got {params:?}"),
        })
    }
}

/// Name-keyed registry of distortion kinds.
pub struct DistortionRegistry {
    map: BTreeMap<&'static str, Box<dyn DistortionKind>>,
}

impl DistortionRegistry {
    pub fn empty() -> Self {
        DistortionRegistry {
            map: BTreeMap::new(),
        }
    }

    pub fn builtin() -> Self {
        let mut r = DistortionRegistry::empty();
        r.register(Box::new(IdentityKind));
        r.register(Box::new(SignedExpKind));
        r.register(Box::new(CubicKind));
        r.register(Box::new(ExprTableKind));
        r
    }

    pub fn register(&mut self, kind: Box<dyn DistortionKind>) {
        self.map.insert(kind.kind(), kind);
    }

    pub fn build(&self, kind: &str, params: &[f64]) -> Result<DistortionFunction> {
        match self.map.get(kind) {
            Some(k) => k.build(params),
            None => Err(Error::UnknownFamily(format!(
                "distortion kind {kind} (known: {})",
                self.kinds().collect::<Vec<_>>().join(", ")
            ))),
        }
    }

    pub fn kinds(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.map.keys().copied()
    }
}

static BUILTIN: Lazy<DistortionRegistry> = Lazy::new(DistortionRegistry::builtin);

/// Build a distortion by kind name, e.g. `make_distortion("signed_exp", &[])`.
pub fn make_distortion(kind: &str, params: &[f64]) -> Result<DistortionFunction> {
    BUILTIN.build(kind, params)
}

// ---------------------------------------------------------------------------
// Channel spec
// ---------------------------------------------------------------------------

/// The immutable channel: distortion, noise law, input cost, noise moment,
/// and cost budget, with the noise entropy and noise moment L_N computed once
/// at construction.
#[derive(Clone)]
pub struct ChannelSpec {
    f: DistortionFunction,
    noise: Density,
    cost: MomentFunction,
    noise_moment: MomentFunction,
    budget: f64,
    noise_entropy: f64,
    noise_moment_value: f64,
}

impl ChannelSpec {
    pub fn new(
        f: DistortionFunction,
        noise: Density,
        cost: MomentFunction,
        noise_moment: MomentFunction,
        budget: f64,
        cfg: &QuadratureConfig,
    ) -> Result<Self> {
        if !(budget > 0.0 && budget.is_finite()) {
            return Err(Error::SpecValidation(format!(
                "budget must be positive and finite, got {budget}"
            )));
        }
        if !noise.sup_bound().is_finite() {
            return Err(Error::SpecValidation(
                "noise density must declare a finite sup bound".into(),
            ));
        }
        if !cost.declared_nondecreasing() {
            return Err(Error::SpecValidation(format!(
                "cost {:?} must be non-decreasing",
                cost
            )));
        }
        // |f| non-decreasing on [0, inf) is a standing assumption of the
        // output-moment machinery, so a channel is only built around a
        // distortion that both declares it and survives a sampled check.
        if !f.declared_absnondecreasing() {
            return Err(Error::SpecValidation(format!(
                "distortion {:?} does not declare |f| non-decreasing",
                f
            )));
        }
        if !f.monotonicity_holds_on_grid(1e6, 512) {
            return Err(Error::SpecValidation(format!(
                "distortion {:?} declares |f| non-decreasing but the sampled grid disagrees",
                f
            )));
        }
        let noise_entropy = differential_entropy(&noise, cfg)?;
        let noise_moment_value = moment_functional(&noise, &noise_moment, cfg)?.expect_finite()?;
        Ok(ChannelSpec {
            f,
            noise,
            cost,
            noise_moment,
            budget,
            noise_entropy,
            noise_moment_value,
        })
    }

    pub fn f(&self) -> &DistortionFunction {
        &self.f
    }
    pub fn noise(&self) -> &Density {
        &self.noise
    }
    pub fn cost(&self) -> &MomentFunction {
        &self.cost
    }
    pub fn noise_moment(&self) -> &MomentFunction {
        &self.noise_moment
    }
    pub fn budget(&self) -> f64 {
        self.budget
    }
    /// h(N), computed once at construction.
    pub fn noise_entropy(&self) -> f64 {
        self.noise_entropy
    }
    /// L_N = E[𝒞_N(|N|)], computed once at construction.
    pub fn noise_moment_value(&self) -> f64 {
        self.noise_moment_value
    }

    /// Conditional output law given X = x: the noise shifted by f(x).
    pub fn transition_density(&self, x: f64) -> Density {
        self.noise.shift(self.f.eval(x))
    }

    /// Output law under a finite-support input: Σ wᵢ p_N(y − f(xᵢ)).
    pub fn output_density(&self, input: &DiscreteInput) -> Result<Density> {
        let comps: Vec<(f64, Density)> = input
            .points()
            .iter()
            .zip(input.weights())
            .filter(|(_, w)| **w > 0.0)
            .map(|(x, w)| (*w, self.transition_density(*x)))
            .collect();
        let mix = mixture(comps)?;
        // Components shifted far apart leave the bulk of each one inside a
        // panel whose initial quadrature nodes all miss it. Seed panels at
        // every component's center and effective edges so none is skipped.
        let (qlo, qhi) = match (self.noise.quantile(1e-13), self.noise.quantile(1.0 - 1e-13)) {
            (Ok(a), Ok(b)) => (a, b),
            _ => return Ok(mix),
        };
        let mut hints = Vec::with_capacity(3 * input.len());
        for (x, w) in input.points().iter().zip(input.weights()) {
            if *w > 0.0 {
                let c = self.f.eval(*x);
                hints.push(c + qlo);
                hints.push(c);
                hints.push(c + qhi);
            }
        }
        Ok(crate::density::with_extra_hints(&mix, hints))
    }

    /// I(F) = h_Y(F) − h_N, in nats.
    pub fn mutual_information(&self, input: &DiscreteInput, cfg: &QuadratureConfig) -> Result<f64> {
        let out = self.output_density(input)?;
        Ok(differential_entropy(&out, cfg)? - self.noise_entropy)
    }

    /// Average cost Σ wᵢ 𝒞(|xᵢ|).
    pub fn input_cost(&self, input: &DiscreteInput) -> f64 {
        input
            .points()
            .iter()
            .zip(input.weights())
            .map(|(x, w)| w * self.cost.eval_abs(*x))
            .sum()
    }

    pub fn is_feasible(&self, input: &DiscreteInput) -> bool {
        self.input_cost(input) <= self.budget + 1e-12
    }

    /// Same channel under a different budget; the cached noise quantities
    /// carry over unchanged.
    pub fn with_budget(&self, budget: f64) -> Result<ChannelSpec> {
        if !(budget > 0.0 && budget.is_finite()) {
            return Err(Error::SpecValidation(format!(
                "budget must be positive and finite, got {budget}"
            )));
        }
        let mut out = self.clone();
        out.budget = budget;
        Ok(out)
    }
}

// ---------------------------------------------------------------------------
// Discrete inputs
// ---------------------------------------------------------------------------

/// A finite-support input distribution: sorted distinct points with
/// probabilities summing to one.
#[derive(Clone, Debug)]
pub struct DiscreteInput {
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl DiscreteInput {
    pub fn new(points: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() || points.len() != weights.len() {
            return Err(Error::InvalidInput(format!(
                "need equally many points and weights, got {} and {}",
                points.len(),
                weights.len()
            )));
        }
        if points.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("points must be finite".into()));
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidInput("weights must be non-negative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!(
                "weights must sum to 1, got {total}"
            )));
        }
        let mut pairs: Vec<(f64, f64)> = points.into_iter().zip(weights).collect();
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        if pairs.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidInput("points must be distinct".into()));
        }
        let (points, weights) = pairs.into_iter().unzip();
        Ok(DiscreteInput { points, weights })
    }

    pub fn point_mass(x: f64) -> Self {
        DiscreteInput {
            points: vec![x],
            weights: vec![1.0],
        }
    }

    /// Equal weights on the given points.
    pub fn uniform_on(points: Vec<f64>) -> Result<Self> {
        let n = points.len();
        DiscreteInput::new(points, vec![1.0 / n as f64; n])
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Drop points with weight below `floor` and renormalize.
    pub fn trimmed(&self, floor: f64) -> Result<Self> {
        let kept: Vec<(f64, f64)> = self
            .points
            .iter()
            .zip(&self.weights)
            .filter(|(_, w)| **w >= floor)
            .map(|(x, w)| (*x, *w))
            .collect();
        if kept.is_empty() {
            return Err(Error::InvalidInput(
                "trim floor removed every support point".into(),
            ));
        }
        let total: f64 = kept.iter().map(|(_, w)| w).sum();
        let (points, weights): (Vec<f64>, Vec<f64>) =
            kept.into_iter().map(|(x, w)| (x, w / total)).unzip();
        Ok(DiscreteInput { points, weights })
    }
}
