//! Numerical toolkit for memoryless additive-noise channels `Y = f(X) + N`.
//!
//! The crate is organized around a handful of building blocks:
//!
//! - [`density`]: a registry of probability density families (Gaussian, Cauchy,
//!   uniform, Pareto, Gamma, generalized Gaussian, finite mixtures, ...) behind a
//!   common evaluator trait.
//! - [`quadrature`]: adaptive Gauss-Kronrod integration with discontinuity-aware
//!   panel splitting and variable transforms for unbounded intervals.
//! - [`entropy`]: differential entropy, sup-normalizing rescaling, tail-entropy
//!   estimates and the analytic tail bound built from a super-logarithmic moment.
//! - [`moments`]: moment functionals `E_p[l(|Y|)]`, super-logarithmic growth
//!   diagnostics and the Markov tail-mass radius.
//! - [`convergence`]: entropy-convergence checking for sequences of densities
//!   under a uniform sup bound and a uniform super-logarithmic moment.
//! - [`channel`]: channel assembly (distortion, noise, cost), output densities
//!   and mutual information of discrete inputs.
//! - [`conditions`]: verification of the sufficient-condition set for capacity
//!   finiteness, including the inverse-distortion map `z(y)` and the combined
//!   output moment function.
//! - [`capacity`]: cost-constrained Blahut-Arimoto with multiplier bisection and
//!   grid refinement, reporting saturation evidence across levels.
//! - [`paperlab`]: two worked counterexample families with closed forms used as
//!   oracles by the test suite.
//!
//! All entropies are in nats. The integrand convention `0 ln 0 = 0` is applied
//! by clamping densities below `1e-300` to zero contribution.

pub mod capacity;
pub mod channel;
pub mod conditions;
pub mod convergence;
pub mod density;
pub mod entropy;
pub mod moments;
pub mod paperlab;
pub mod quadrature;
pub mod schema;

pub use density::{make_density, Density};
pub use quadrature::{IntegralResult, QuadratureConfig};

/// Errors shared across the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("no registered {0}")]
    UnknownFamily(String),
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("evaluator returned a non-finite value at y = {at}")]
    NonFiniteEvaluation { at: f64 },
    #[error("integral did not converge within {subdivisions} subdivisions (error estimate {error_estimate:e})")]
    QuadratureNonConvergence {
        subdivisions: usize,
        error_estimate: f64,
    },
    #[error("supremum not certified: {0}")]
    SupremumNotCertified(String),
    #[error("cost never reaches {target:e} on the searchable range (max searched {searched:e})")]
    CostTargetUnreachable { target: f64, searched: f64 },
    #[error("bracket failure: {0}")]
    BracketFailure(String),
    #[error("channel specification rejected: {0}")]
    SpecValidation(String),
    #[error("moment is not finite at tolerance (partial value {partial:e}, error estimate {error_estimate:e})")]
    MomentNotFinite { partial: f64, error_estimate: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

/// A closed interval of the extended real line; endpoints may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        assert!(lo <= hi, "interval endpoints out of order: [{lo}, {hi}]");
        Interval { lo, hi }
    }

    pub fn real_line() -> Self {
        Interval {
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
        }
    }

    pub fn contains(&self, y: f64) -> bool {
        y >= self.lo && y <= self.hi
    }

    pub fn is_bounded(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    /// Shift both endpoints by `c`.
    pub fn shift(&self, c: f64) -> Self {
        Interval {
            lo: self.lo + c,
            hi: self.hi + c,
        }
    }

    /// Scale both endpoints by `m > 0`.
    pub fn scale(&self, m: f64) -> Self {
        Interval {
            lo: self.lo * m,
            hi: self.hi * m,
        }
    }

    pub fn hull(&self, other: &Interval) -> Self {
        Interval {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
        }
    }
}
