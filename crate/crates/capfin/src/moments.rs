//! Moment functionals E[l(|Y|)], super-logarithmic growth diagnostics, and
//! the Markov tail bound used by the input-distribution tightness argument.
//!
//! One type, [`MomentFunction`], serves three roles: the convergence moment
//! `l`, the input cost, and the noise moment. All are non-negative functions
//! on [0, ∞); monotonicity and super-log growth are caller declarations that
//! downstream verdicts quote rather than asymptotic facts this module could
//! prove (see [`superlog_diagnostic`] for the finite-range evidence).

use crate::density::Density;
use crate::quadrature::{integrate, QuadratureConfig};
use crate::{Error, Result};
use once_cell::sync::Lazy;
use std::collections::BTreeMap;
use std::sync::Arc;

/// A named non-negative function on [0, ∞) with declared growth properties.
#[derive(Clone)]
pub struct MomentFunction {
    name: String,
    eval: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    declared_nondecreasing: bool,
    declared_superlog: bool,
}

impl MomentFunction {
    pub fn new(
        name: impl Into<String>,
        eval: impl Fn(f64) -> f64 + Send + Sync + 'static,
        declared_nondecreasing: bool,
        declared_superlog: bool,
    ) -> Self {
        MomentFunction {
            name: name.into(),
            eval: Arc::new(eval),
            declared_nondecreasing,
            declared_superlog,
        }
    }

    /// Evaluate at `y ≥ 0`.
    pub fn eval(&self, y: f64) -> f64 {
        (self.eval)(y)
    }

    /// Evaluate at `|y|`, the form every expectation in this crate takes.
    pub fn eval_abs(&self, y: f64) -> f64 {
        (self.eval)(y.abs())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn declared_nondecreasing(&self) -> bool {
        self.declared_nondecreasing
    }

    /// Whether the caller asserts l = ω(ln). A declaration, not a proof.
    pub fn declared_superlog(&self) -> bool {
        self.declared_superlog
    }

    /// The function `y ↦ l(y/m)` that appears after rescaling a density by
    /// `m > 0`. Monotonicity and growth class survive the substitution.
    pub fn rescaled(&self, m: f64) -> MomentFunction {
        assert!(m > 0.0, "rescale factor must be positive");
        let inner = self.eval.clone();
        MomentFunction {
            name: format!("{}[y/{m}]", self.name),
            eval: Arc::new(move |y| inner(y / m)),
            declared_nondecreasing: self.declared_nondecreasing,
            declared_superlog: self.declared_superlog,
        }
    }
}

impl std::fmt::Debug for MomentFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.name)
    }
}

// ---------------------------------------------------------------------------
// Registry of moment-function kinds
// ---------------------------------------------------------------------------

/// Builder for one moment-function kind, registered by name.
pub trait MomentKind: Send + Sync {
    fn kind(&self) -> &'static str;
    fn signature(&self) -> &'static str;
    fn build(&self, params: &[f64]) -> Result<MomentFunction>;
}

fn check_params(params: &[f64], n: usize, kind: &str) -> Result<()> {
    if params.len() == n && params.iter().all(|p| p.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: "params",
            reason: format!("{kind} takes {n} finite parameters, got {params:?}"),
        })
    }
}

struct PowerKind;

impl MomentKind for PowerKind {
    fn kind(&self) -> &'static str {
        "power"
    }
    fn signature(&self) -> &'static str {
        "[p] with p >= 0: y^p"
    }
    fn build(&self, params: &[f64]) -> Result<MomentFunction> {
        check_params(params, 1, "power")?;
        let p = params[0];
        if p < 0.0 {
            return Err(Error::InvalidParameter {
                name: "p",
                reason: "negative exponents are decreasing".into(),
            });
        }
        Ok(MomentFunction::new(
            format!("y^{p}"),
            move |y: f64| y.powf(p),
            true,
            p > 0.0,
        ))
    }
}

struct LogPowerKind;

impl MomentKind for LogPowerKind {
    fn kind(&self) -> &'static str {
        "log_power"
    }
    fn signature(&self) -> &'static str {
        "[p] with p >= 0: ln^p(1+y)"
    }
    fn build(&self, params: &[f64]) -> Result<MomentFunction> {
        check_params(params, 1, "log_power")?;
        let p = params[0];
        if p < 0.0 {
            return Err(Error::InvalidParameter {
                name: "p",
                reason: "negative exponents are decreasing".into(),
            });
        }
        Ok(MomentFunction::new(
            format!("ln^{p}(1+y)"),
            move |y: f64| y.ln_1p().powf(p),
            true,
            // ln^p grows faster than every multiple of ln only for p > 1.
            p > 1.0,
        ))
    }
}

struct Log1pSqKind;

impl MomentKind for Log1pSqKind {
    fn kind(&self) -> &'static str {
        "log1p_sq"
    }
    fn signature(&self) -> &'static str {
        "[]: ln(1+y^2)"
    }
    fn build(&self, params: &[f64]) -> Result<MomentFunction> {
        check_params(params, 0, "log1p_sq")?;
        Ok(MomentFunction::new(
            "ln(1+y^2)",
            // Past 1e150 the square overflows while ln(1+y²) − 2 ln y < 1e-300.
            |y: f64| {
                if y > 1e150 {
                    2.0 * y.ln()
                } else {
                    (y * y).ln_1p()
                }
            },
            true,
            // Asymptotically 2 ln y, so not super-logarithmic.
            false,
        ))
    }
}

struct ZeroKind;

impl MomentKind for ZeroKind {
    fn kind(&self) -> &'static str {
        "zero"
    }
    fn signature(&self) -> &'static str {
        "[]: 0"
    }
    fn build(&self, params: &[f64]) -> Result<MomentFunction> {
        check_params(params, 0, "zero")?;
        Ok(MomentFunction::new("0", |_| 0.0, true, false))
    }
}

/// Name-keyed registry of moment-function kinds.
pub struct MomentRegistry {
    map: BTreeMap<&'static str, Box<dyn MomentKind>>,
}

impl MomentRegistry {
    pub fn empty() -> Self {
        MomentRegistry {
            map: BTreeMap::new(),
        }
    }

    pub fn builtin() -> Self {
        let mut r = MomentRegistry::empty();
        r.register(Box::new(PowerKind));
        r.register(Box::new(LogPowerKind));
        r.register(Box::new(Log1pSqKind));
        r.register(Box::new(ZeroKind));
        r
    }

    pub fn register(&mut self, kind: Box<dyn MomentKind>) {
        self.map.insert(kind.kind(), kind);
    }

    pub fn build(&self, kind: &str, params: &[f64]) -> Result<MomentFunction> {
        match self.map.get(kind) {
            Some(k) => k.build(params),
            None => Err(Error::UnknownFamily(format!(
                "moment kind {kind} (known: {})",
                self.kinds().collect::<Vec<_>>().join(", ")
            ))),
        }
    }

    pub fn kinds(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.map.keys().copied()
    }
}

static BUILTIN: Lazy<MomentRegistry> = Lazy::new(MomentRegistry::builtin);

/// Build a moment function by kind name, e.g. `make_moment_fn("log_power", &[2.0])`.
pub fn make_moment_fn(kind: &str, params: &[f64]) -> Result<MomentFunction> {
    BUILTIN.build(kind, params)
}

// ---------------------------------------------------------------------------
// Moment functionals
// ---------------------------------------------------------------------------

/// Outcome of a moment computation. Divergence at the configured tolerance is
/// a meaningful answer, not an error.
#[derive(Clone, Debug)]
pub enum MomentVerdict {
    Finite(f64),
    NotFiniteAtTolerance { partial: f64, error_estimate: f64 },
}

impl MomentVerdict {
    pub fn finite(&self) -> Option<f64> {
        match self {
            MomentVerdict::Finite(v) => Some(*v),
            MomentVerdict::NotFiniteAtTolerance { .. } => None,
        }
    }

    /// Convert to a hard error for callers that require a finite moment.
    pub fn expect_finite(self) -> Result<f64> {
        match self {
            MomentVerdict::Finite(v) => Ok(v),
            MomentVerdict::NotFiniteAtTolerance {
                partial,
                error_estimate,
            } => Err(Error::MomentNotFinite {
                partial,
                error_estimate,
            }),
        }
    }
}

/// E_p[l(|Y|)]. Integrates with the change of variables suited to the
/// density's tails; quadrature that fails to settle is reported as a
/// not-finite-at-tolerance verdict.
pub fn moment_functional(
    p: &Density,
    l: &MomentFunction,
    cfg: &QuadratureConfig,
) -> Result<MomentVerdict> {
    let mut qcfg = cfg.clone();
    qcfg.tail_transform = p.preferred_tail_transform();
    let mut bp = p.panel_hints();
    bp.push(0.0);
    let r = integrate(
        |y| {
            let py = p.pdf(y);
            if py == 0.0 {
                0.0
            } else {
                l.eval_abs(y) * py
            }
        },
        p.support(),
        &bp,
        &qcfg,
    )?;
    if r.converged {
        Ok(MomentVerdict::Finite(r.value))
    } else {
        Ok(MomentVerdict::NotFiniteAtTolerance {
            partial: r.value,
            error_estimate: r.error_estimate,
        })
    }
}

// ---------------------------------------------------------------------------
// Super-logarithmic growth diagnostic
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct KappaDomination {
    pub kappa: f64,
    /// Smallest sampled c with `l(y) ≥ κ ln y` for every sampled y in
    /// [c, y_max]; `None` when even the top of the range fails.
    pub dominated_from: Option<f64>,
}

/// Finite-range evidence for (or against) l = ω(ln).
#[derive(Clone, Debug)]
pub struct SuperlogReport {
    pub results: Vec<KappaDomination>,
    pub y_max: f64,
    pub grid_points: usize,
}

impl SuperlogReport {
    pub fn all_dominated(&self) -> bool {
        self.results.iter().all(|r| r.dominated_from.is_some())
    }
}

const SUPERLOG_GRID: usize = 512;

/// For each κ, the smallest sampled c such that `l(y) ≥ κ ln y` holds on the
/// whole sampled suffix [c, y_max]. Evidence over a finite range only; it can
/// refute a super-log declaration on the range but never prove the asymptotic
/// property.
pub fn superlog_diagnostic(
    l: &MomentFunction,
    kappa_grid: &[f64],
    y_max: f64,
) -> Result<SuperlogReport> {
    if !(y_max > std::f64::consts::E) {
        return Err(Error::InvalidInput(format!(
            "y_max must exceed e, got {y_max}"
        )));
    }
    if kappa_grid.is_empty() || kappa_grid.iter().any(|k| !(*k > 0.0)) {
        return Err(Error::InvalidInput("kappa grid must be positive".into()));
    }
    let lo = std::f64::consts::E;
    let ratio = (y_max / lo).powf(1.0 / (SUPERLOG_GRID - 1) as f64);
    let grid: Vec<f64> = (0..SUPERLOG_GRID)
        .map(|i| lo * ratio.powi(i as i32))
        .collect();
    let mut results = Vec::with_capacity(kappa_grid.len());
    for &kappa in kappa_grid {
        // Walk down from y_max; the suffix property breaks at the first
        // failure seen from above.
        let mut from = None;
        for (i, &y) in grid.iter().enumerate().rev() {
            if l.eval(y) >= kappa * y.ln() {
                from = Some(grid[i]);
            } else {
                break;
            }
        }
        results.push(KappaDomination {
            kappa,
            dominated_from: from,
        });
    }
    Ok(SuperlogReport {
        results,
        y_max,
        grid_points: SUPERLOG_GRID,
    })
}

// ---------------------------------------------------------------------------
// Markov tightness bound
// ---------------------------------------------------------------------------

/// Smallest K (plus one, as the tightness argument states it) such that any
/// input with E[cost(|X|)] ≤ a puts at most ε of its mass outside [−K+1, K−1]:
/// the leftmost x with cost(x) ≥ a/ε, plus 1.
pub fn markov_tightness_bound(cost: &MomentFunction, a: f64, epsilon: f64) -> Result<f64> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "budget must be positive and finite, got {a}"
        )));
    }
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::InvalidInput(format!(
            "epsilon must lie in (0, 1], got {epsilon}"
        )));
    }
    if !cost.declared_nondecreasing() {
        return Err(Error::InvalidInput(format!(
            "cost {:?} is not declared non-decreasing; bisection needs monotonicity",
            cost
        )));
    }
    let target = a / epsilon;
    if cost.eval(0.0) >= target {
        return Ok(1.0);
    }
    let mut hi = 1.0f64;
    while cost.eval(hi) < target {
        hi *= 2.0;
        if hi > 1e300 {
            return Err(Error::CostTargetUnreachable {
                target,
                searched: hi / 2.0,
            });
        }
    }
    let mut lo = if hi == 1.0 { 0.0 } else { hi / 2.0 };
    // Invariant: cost(lo) < target ≤ cost(hi); converge to the leftmost
    // satisfying point.
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if !(mid > lo && mid < hi) {
            break;
        }
        if cost.eval(mid) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi + 1.0)
}
