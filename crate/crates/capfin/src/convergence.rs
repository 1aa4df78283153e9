//! Checks whether entropies of a density sequence converge to the entropy of
//! its pointwise limit.
//!
//! Two sampled conditions gate the conclusion: a uniform bound on the sup of
//! the densities, and a uniform bound on a super-logarithmic moment across
//! the sequence. When both hold the entropy sequence is expected to close in
//! on the limit's entropy; when the moment supremum escapes the configured
//! cap the checker reports the violation instead of extrapolating. Pointwise
//! gaps are measured away from declared discontinuity points, since
//! convergence off a countable set is all the conclusion needs.

use std::collections::BTreeMap;
use std::ops::RangeInclusive;
use std::sync::Arc;

use rayon::prelude::*;

use crate::density::{make_density, mixture, Density};
use crate::entropy::differential_entropy;
use crate::moments::{moment_functional, MomentFunction, MomentVerdict};
use crate::paperlab::example1_density;
use crate::quadrature::QuadratureConfig;
use crate::{Error, Result};

type MemberFn = Arc<dyn Fn(u64) -> Result<Density> + Send + Sync>;

/// A parametric density sequence with an explicit candidate limit.
pub struct DensitySequence {
    index_set: RangeInclusive<u64>,
    member: MemberFn,
    limit: Density,
}

impl DensitySequence {
    pub fn new(
        index_set: RangeInclusive<u64>,
        member: impl Fn(u64) -> Result<Density> + Send + Sync + 'static,
        limit: Density,
    ) -> Self {
        DensitySequence {
            index_set,
            member: Arc::new(member),
            limit,
        }
    }

    /// Zero-mean Gaussians with variance 1 + 1/m shrinking onto N(0,1).
    pub fn gaussian_scale() -> Self {
        let limit = make_density("gaussian", &[0.0, 1.0]).expect("unit gaussian");
        DensitySequence::new(
            1..=u64::MAX,
            |m| make_density("gaussian", &[0.0, (1.0 + 1.0 / m as f64).sqrt()]),
            limit,
        )
    }

    /// The plateau-plus-log-tail family whose entropies stay near 1/2 while
    /// the pointwise limit is uniform on [0,1] with entropy 0.
    pub fn example1() -> Self {
        let limit = make_density("uniform", &[0.0, 1.0]).expect("unit uniform");
        DensitySequence::new(3..=u64::MAX, example1_density, limit)
    }

    /// The constant sequence p_m = p.
    pub fn constant(p: Density) -> Self {
        let limit = p.clone();
        DensitySequence::new(1..=u64::MAX, move |_| Ok(p.clone()), limit)
    }

    /// (1 − 1/m)·base + (1/m)·bump, collapsing onto base.
    pub fn mixture_interpolation(base: Density, bump: Density) -> Self {
        let limit = base.clone();
        DensitySequence::new(
            2..=u64::MAX,
            move |m| {
                let eps = 1.0 / m as f64;
                mixture(vec![(1.0 - eps, base.clone()), (eps, bump.clone())])
            },
            limit,
        )
    }

    pub fn member(&self, m: u64) -> Result<Density> {
        if !self.contains_index(m) {
            return Err(Error::InvalidInput(format!(
                "index {m} outside the sequence's index set"
            )));
        }
        (self.member)(m)
    }

    pub fn limit(&self) -> &Density {
        &self.limit
    }

    pub fn contains_index(&self, m: u64) -> bool {
        self.index_set.contains(&m)
    }
}

/// Supremum of the tested moments, or the escape report when it crossed the
/// configured cap (or its integral outright diverged).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MomentSupremum {
    Bounded(f64),
    UnboundedAtTolerance { max_observed: f64, cap: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    ConditionsHoldAndConverges,
    C1Violated,
    C2Violated,
    Inconclusive,
}

#[derive(Clone, Debug)]
pub struct ConvergenceReport {
    /// Max over members and limit of declared sup bounds and sampled maxima.
    pub m_found: f64,
    /// Supremum of E_{p_m}[l(|Y|)] over the tested members.
    pub l_found: MomentSupremum,
    /// Cap above which the moment supremum counts as unbounded.
    pub moment_cap: f64,
    /// E_p[l(|Y|)] for the limit, when its integral converged.
    pub limit_moment: Option<f64>,
    pub pointwise_max_gap: BTreeMap<u64, f64>,
    pub entropy_sequence: BTreeMap<u64, f64>,
    pub entropy_limit: Option<f64>,
    pub verdict: Verdict,
    pub notes: Vec<String>,
}

/// Tuning for the sequence checker.
#[derive(Clone, Debug)]
pub struct ConvergenceConfig {
    pub quadrature: QuadratureConfig,
    /// Moment suprema above this are declared unbounded for verdict purposes.
    pub moment_cap: f64,
    /// Points in the internally built comparison grid.
    pub grid_points: usize,
    /// Override for the grid span; derived from quantiles when absent.
    pub grid_span: Option<(f64, f64)>,
    /// Entropy gap at the largest tested index that still counts as
    /// converged.
    pub convergence_tol: f64,
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        ConvergenceConfig {
            quadrature: QuadratureConfig::default(),
            moment_cap: 1e6,
            grid_points: 2048,
            grid_span: None,
            convergence_tol: 5e-3,
        }
    }
}

/// Max of |p_m − p| over the grid, skipping points within 1e-12 of a declared
/// discontinuity of either density. Convergence is only required off that
/// countable set, so jumps sitting exactly on it are not counted against the
/// sequence. An empty surviving grid yields 0.
pub fn pointwise_gap(seq: &DensitySequence, m: u64, grid: &[f64]) -> Result<f64> {
    let p_m = seq.member(m)?;
    gap_on_grid(&p_m, seq.limit(), grid).ok_or_else(|| {
        Error::InvalidInput("grid contains a point where a density is non-finite".into())
    })
}

fn gap_on_grid(a: &Density, b: &Density, grid: &[f64]) -> Option<f64> {
    let mut excluded = a.discontinuities();
    excluded.extend(b.discontinuities());
    let mut worst: f64 = 0.0;
    for &y in grid {
        if excluded.iter().any(|d| (y - d).abs() <= 1e-12) {
            continue;
        }
        let g = (a.pdf(y) - b.pdf(y)).abs();
        if !g.is_finite() {
            return None;
        }
        worst = worst.max(g);
    }
    Some(worst)
}

fn sampled_sup(d: &Density, grid: &[f64]) -> f64 {
    grid.iter().fold(0.0f64, |acc, &y| acc.max(d.pdf(y)))
}

/// Quantile-anchored comparison grid: half the points spread uniformly over
/// the hull of the central quantile boxes, the rest placed at quantiles of
/// each density so mass concentrations are sampled even when supports span
/// wildly different scales.
fn build_grid(densities: &[&Density], cfg: &ConvergenceConfig) -> Result<Vec<f64>> {
    let n = cfg.grid_points.max(16);
    let mut grid = Vec::with_capacity(2 * n);
    let (lo, hi) = match cfg.grid_span {
        Some(span) => span,
        None => {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for d in densities {
                lo = lo.min(d.quantile(1e-4)?);
                hi = hi.max(d.quantile(1.0 - 1e-4)?);
            }
            (lo, hi)
        }
    };
    if !(lo.is_finite() && hi.is_finite() && hi > lo) {
        return Err(Error::InvalidInput(format!(
            "degenerate comparison span [{lo}, {hi}]"
        )));
    }
    let uniform = n / 2;
    for idx in 0..uniform {
        grid.push(lo + (hi - lo) * (idx as f64 + 0.5) / uniform as f64);
    }
    let per_density = (n - uniform) / densities.len().max(1);
    for d in densities {
        for j in 0..per_density {
            grid.push(d.quantile((j as f64 + 0.5) / per_density as f64)?);
        }
    }
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    grid.dedup();
    Ok(grid)
}

struct PerMember {
    m: u64,
    moment: Result<MomentVerdict>,
    entropy: Result<f64>,
    gap: Option<f64>,
    declared_sup: f64,
    sampled_sup: f64,
}

/// Runs the full check: uniform sup bound, uniform super-log moment, entropy
/// sequence against the limit's entropy, and pointwise gaps, rolled into one
/// report. `l` must be declared super-logarithmic, otherwise the premise the
/// check rests on is absent and the call is rejected.
pub fn check_theorem1(
    seq: &DensitySequence,
    l: &MomentFunction,
    m_list: &[u64],
    cfg: &ConvergenceConfig,
) -> Result<ConvergenceReport> {
    if m_list.is_empty() {
        return Err(Error::InvalidInput("m_list must be non-empty".into()));
    }
    if !l.declared_superlog() {
        return Err(Error::InvalidInput(format!(
            "{:?} is not declared super-logarithmic; the moment condition needs l growing faster than ln",
            l
        )));
    }
    let mut indices: Vec<u64> = m_list.to_vec();
    indices.sort_unstable();
    indices.dedup();
    for &m in &indices {
        if !seq.contains_index(m) {
            return Err(Error::InvalidInput(format!(
                "index {m} outside the sequence's index set"
            )));
        }
    }

    let members: Vec<(u64, Density)> = indices
        .iter()
        .map(|&m| Ok((m, seq.member(m)?)))
        .collect::<Result<_>>()?;
    let mut for_grid: Vec<&Density> = vec![seq.limit()];
    for (_, d) in &members {
        for_grid.push(d);
    }
    let grid = build_grid(&for_grid, cfg)?;

    let per_member: Vec<PerMember> = members
        .par_iter()
        .map(|(m, d)| PerMember {
            m: *m,
            moment: moment_functional(d, l, &cfg.quadrature),
            entropy: differential_entropy(d, &cfg.quadrature),
            gap: gap_on_grid(d, seq.limit(), &grid),
            declared_sup: d.sup_bound(),
            sampled_sup: sampled_sup(d, &grid),
        })
        .collect();

    let mut notes = vec![
        format!("moment cap = {:e}", cfg.moment_cap),
        "pointwise gaps skip declared discontinuity points; convergence off a countable set suffices".into(),
    ];

    // Uniform sup bound from both sources, limit included.
    let mut declared_max = seq.limit().sup_bound();
    let mut sampled_max = sampled_sup(seq.limit(), &grid);
    for pm in &per_member {
        declared_max = declared_max.max(pm.declared_sup);
        sampled_max = sampled_max.max(pm.sampled_sup);
    }
    let m_found = declared_max.max(sampled_max);
    notes.push(format!(
        "sup sources: declared max = {declared_max:.6}, sampled max = {sampled_max:.6}"
    ));

    // Moment supremum across members. A non-convergent moment integral only
    // certifies a violation once its partial value has already crossed the
    // cap; below the cap it leaves the condition undecided.
    let mut max_observed = f64::NEG_INFINITY;
    let mut exceeded = false;
    let mut ambiguous = false;
    let mut finite_moments = Vec::new();
    for pm in &per_member {
        match &pm.moment {
            Ok(MomentVerdict::Finite(v)) => {
                max_observed = max_observed.max(*v);
                finite_moments.push(*v);
                if *v > cfg.moment_cap {
                    exceeded = true;
                }
            }
            Ok(MomentVerdict::NotFiniteAtTolerance { partial, .. }) => {
                max_observed = max_observed.max(*partial);
                if *partial > cfg.moment_cap {
                    exceeded = true;
                } else {
                    ambiguous = true;
                    notes.push(format!(
                        "moment integral at m = {} did not settle below the cap; condition undecided there",
                        pm.m
                    ));
                }
            }
            Err(e) => {
                ambiguous = true;
                notes.push(format!("moment at m = {} failed: {e}", pm.m));
            }
        }
    }
    if finite_moments.len() == indices.len() && finite_moments.windows(2).all(|w| w[1] > w[0]) {
        notes.push(
            "moments increase monotonically across tested m; supremum is the largest tested value, no extrapolation".into(),
        );
    }
    let l_found = if exceeded {
        MomentSupremum::UnboundedAtTolerance {
            max_observed,
            cap: cfg.moment_cap,
        }
    } else {
        MomentSupremum::Bounded(max_observed)
    };

    let limit_moment = match moment_functional(seq.limit(), l, &cfg.quadrature) {
        Ok(MomentVerdict::Finite(v)) => Some(v),
        _ => None,
    };

    let mut entropy_sequence = BTreeMap::new();
    let mut pointwise_max_gap = BTreeMap::new();
    let mut entropy_failed = false;
    for pm in &per_member {
        match &pm.entropy {
            Ok(h) => {
                entropy_sequence.insert(pm.m, *h);
            }
            Err(e) => {
                entropy_failed = true;
                notes.push(format!("entropy at m = {} did not converge: {e}", pm.m));
            }
        }
        if let Some(g) = pm.gap {
            pointwise_max_gap.insert(pm.m, g);
        }
    }
    let entropy_limit = match differential_entropy(seq.limit(), &cfg.quadrature) {
        Ok(h) => Some(h),
        Err(e) => {
            entropy_failed = true;
            notes.push(format!("entropy of the limit did not converge: {e}"));
            None
        }
    };

    let verdict = if !m_found.is_finite() {
        Verdict::C1Violated
    } else if exceeded {
        Verdict::C2Violated
    } else if ambiguous || entropy_failed {
        Verdict::Inconclusive
    } else {
        let last = *indices.last().expect("non-empty");
        let gap = (entropy_sequence[&last] - entropy_limit.expect("checked")).abs();
        if gap <= cfg.convergence_tol {
            Verdict::ConditionsHoldAndConverges
        } else {
            notes.push(format!(
                "conditions verified at tolerance but entropy gap {gap:.6} at m = {last} exceeds {:.6}; test larger m",
                cfg.convergence_tol
            ));
            Verdict::Inconclusive
        }
    };

    Ok(ConvergenceReport {
        m_found,
        l_found,
        moment_cap: cfg.moment_cap,
        limit_moment,
        pointwise_max_gap,
        entropy_sequence,
        entropy_limit,
        verdict,
        notes,
    })
}
