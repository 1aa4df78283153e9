//! Differential entropy on unbounded domains, discrete entropy, the
//! sup-normalizing rescale, and the tail-entropy upper bound chain.
//!
//! Everything is in nats. The integrand −p ln p is evaluated through
//! `log_pdf` so far tails cost a subtraction instead of an underflow, with
//! the 0·ln 0 = 0 convention applied below a floor where the contribution
//! is smaller than anything representable.

use crate::density::{Density, Scaled};
use crate::moments::MomentFunction;
use crate::quadrature::{integrate, IntegralResult, QuadratureConfig};
use crate::{Error, Interval, Result};

/// ln(1e-300): below this log-density the entropy integrand is treated as 0.
/// The discarded contribution per point is under 7e-298.
const LOG_PDF_FLOOR: f64 = -690.77552789821368;

fn entropy_integrand(p: &Density, y: f64) -> f64 {
    let lp = p.log_pdf(y);
    if lp <= LOG_PDF_FLOOR {
        0.0
    } else {
        -lp.exp() * lp
    }
}

fn entropy_breakpoints(p: &Density) -> Vec<f64> {
    let mut bp = p.discontinuities();
    bp.extend(p.panel_hints());
    bp
}

fn entropy_integral(
    p: &Density,
    domain: Interval,
    cfg: &QuadratureConfig,
) -> Result<IntegralResult> {
    let mut qcfg = cfg.clone();
    qcfg.tail_transform = p.preferred_tail_transform();
    integrate(
        |y| entropy_integrand(p, y),
        domain,
        &entropy_breakpoints(p),
        &qcfg,
    )
}

/// h(p) = −∫ p ln p, in nats. Non-convergence is an error, never a number.
pub fn differential_entropy(p: &Density, cfg: &QuadratureConfig) -> Result<f64> {
    let r = entropy_integral(p, p.support(), cfg)?;
    if !r.converged {
        return Err(Error::QuadratureNonConvergence {
            subdivisions: r.subdivisions_used,
            error_estimate: r.error_estimate,
        });
    }
    Ok(r.value)
}

/// Change of variables Z = M·Y with M the declared sup bound: the returned
/// density has sup ≤ 1 and entropy h(p) + shift with shift = ln M.
/// Densities already bounded by 1 come back unchanged with shift 0.
pub fn rescale_to_unit_sup(p: &Density) -> (Density, f64) {
    let m = p.sup_bound();
    if m <= 1.0 {
        (p.clone(), 0.0)
    } else {
        (Density::from_pdf(Scaled { base: p.clone(), m }), m.ln())
    }
}

/// Two-sided tail of the entropy integral: −∫_{|y| ≥ ỹ} p ln p.
/// Requires sup ≤ 1 so the integrand is non-negative on the tails.
pub fn tail_entropy(p: &Density, y_tilde: f64, cfg: &QuadratureConfig) -> Result<f64> {
    if !(y_tilde > 0.0) {
        return Err(Error::InvalidInput(format!(
            "tail cutoff must be positive, got {y_tilde}"
        )));
    }
    if p.sup_bound() > 1.0 + 1e-12 {
        return Err(Error::InvalidInput(format!(
            "tail_entropy needs sup_bound <= 1 (got {}); rescale first",
            p.sup_bound()
        )));
    }
    let sup = p.support();
    let mut total = 0.0;
    for side in [
        Interval::new(f64::NEG_INFINITY, -y_tilde),
        Interval::new(y_tilde, f64::INFINITY),
    ] {
        let lo = side.lo.max(sup.lo);
        let hi = side.hi.min(sup.hi);
        if lo >= hi {
            continue;
        }
        let r = entropy_integral(p, Interval::new(lo, hi), cfg)?;
        if !r.converged {
            return Err(Error::QuadratureNonConvergence {
                subdivisions: r.subdivisions_used,
                error_estimate: r.error_estimate,
            });
        }
        total += r.value;
    }
    Ok(total)
}

/// Inputs to the tail-entropy bound: a uniform moment bound, the moment
/// function it is taken under, and the tail cutoff.
#[derive(Clone, Debug)]
pub struct TailBoundInputs {
    /// Uniform bound L on E[l(|Y|)] across the family under study.
    pub moment_bound: f64,
    pub l: MomentFunction,
    pub y_tilde: f64,
}

const SUP_GRID: usize = 2048;

/// sup_{y ≥ y0} ln(1+y)/l(y), certified on a geometric grid: the ratio must
/// be non-increasing over the final stretch of the grid, otherwise no finite
/// sample can vouch for the tail and the computation refuses to guess.
fn certified_ratio_sup(l: &MomentFunction, y0: f64) -> Result<f64> {
    let cap = (y0 * 1e8).max(1e12);
    let ratio = (cap / y0).powf(1.0 / (SUP_GRID - 1) as f64);
    let mut values = Vec::with_capacity(SUP_GRID);
    for i in 0..SUP_GRID {
        let y = y0 * ratio.powi(i as i32);
        let ly = l.eval(y);
        if !(ly > 0.0) {
            return Err(Error::SupremumNotCertified(format!(
                "{:?} vanishes at y = {y}; ratio ln(1+y)/l(y) unbounded",
                l
            )));
        }
        values.push(y.ln_1p() / ly);
    }
    let tail_start = SUP_GRID - SUP_GRID / 4;
    for i in tail_start..SUP_GRID - 1 {
        if values[i + 1] > values[i] * (1.0 + 1e-12) {
            return Err(Error::SupremumNotCertified(format!(
                "ratio ln(1+y)/{:?} still increasing at the grid cap {cap:.3e}",
                l
            )));
        }
    }
    Ok(values.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
}

/// Upper bound on the tail entropy of any sup ≤ 1 density whose l-moment is
/// at most `moment_bound`:
///
/// ```text
/// L ln π / l(ỹ)  +  2 L sup_{y ≥ ỹ} ln(1+y)/l(y)  +  (1/e) ln 4 / ln(1+ỹ²)
/// ```
///
/// The middle supremum is certified on a finite grid, not extrapolated.
pub fn tail_entropy_bound(inputs: &TailBoundInputs) -> Result<f64> {
    let TailBoundInputs {
        moment_bound,
        l,
        y_tilde,
    } = inputs;
    if !(*moment_bound >= 0.0 && moment_bound.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "moment bound must be finite and non-negative, got {moment_bound}"
        )));
    }
    if !(*y_tilde > 0.0) {
        return Err(Error::InvalidInput(format!(
            "y_tilde must be positive, got {y_tilde}"
        )));
    }
    if !l.declared_nondecreasing() {
        return Err(Error::InvalidInput(format!(
            "moment function {:?} must be non-decreasing",
            l
        )));
    }
    let l_at = l.eval(*y_tilde);
    if !(l_at > 0.0) {
        return Err(Error::InvalidInput(format!(
            "l(y_tilde) must be positive, got l({y_tilde}) = {l_at}"
        )));
    }
    let first = moment_bound * std::f64::consts::PI.ln() / l_at;
    let second = if *moment_bound == 0.0 {
        0.0
    } else {
        2.0 * moment_bound * certified_ratio_sup(l, *y_tilde)?
    };
    let third = (1.0 / std::f64::consts::E) * 4.0f64.ln() / (y_tilde * y_tilde).ln_1p();
    Ok(first + second + third)
}

/// −Σ p ln p over a mass function, 0 ln 0 = 0. With `complete` the masses
/// must sum to 1 within 1e-9; partial (truncated) mass lists skip that check.
pub fn discrete_entropy(pmf: &[(f64, f64)], complete: bool) -> Result<f64> {
    let mut sum = 0.0;
    let mut h = 0.0;
    for &(point, prob) in pmf {
        if prob < 0.0 || !prob.is_finite() {
            return Err(Error::InvalidInput(format!(
                "probability at {point} is {prob}; must be finite and non-negative"
            )));
        }
        sum += prob;
        if prob > 0.0 {
            h -= prob * prob.ln();
        }
    }
    if complete && (sum - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidInput(format!(
            "complete pmf sums to {sum}, expected 1"
        )));
    }
    Ok(h)
}
