//! Cost-constrained capacity of `Y = f(X) + N` by Blahut-Arimoto over
//! discretized inputs, with multiplier bisection and grid refinement.
//!
//! The output alphabet is an integer lattice with a power-of-two pitch. Each
//! input point owns a window of lattice sites centered at `round(f(x)/pitch)`
//! and the kernel is stored per window, indexed in i128. Scaling an f64 by a
//! power of two is exact, so a distortion output of 1e30 is itself an exact
//! lattice multiple and its noise offsets survive unrounded; a uniform y-grid
//! in plain f64 coordinates would have lost the window entirely to rounding.

use crate::channel::{ChannelSpec, DiscreteInput};
use crate::conditions::z_of_y;
use crate::moments::markov_tightness_bound;
use crate::quadrature::QuadratureConfig;
use crate::{Error, Result};
use rayon::prelude::*;

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

/// Knobs for the discretized capacity solver.
#[derive(Clone, Debug)]
pub struct SolverConfig {
    /// Base input range; refinement may widen it, never shrink it.
    pub grid_min: f64,
    pub grid_max: f64,
    /// Input points at the coarsest level, doubled at each refinement level.
    pub grid_points: usize,
    /// Output lattice sites per noise window; fixes the lattice pitch.
    pub y_grid_points: usize,
    /// Stop Blahut-Arimoto once a sweep gains less than this in the Lagrangian.
    pub ba_tol: f64,
    pub ba_max_iter: usize,
    /// Multiplier search starts from this bracket; the high end doubles on
    /// demand up to 2^30 before the search gives up.
    pub multiplier_lo: f64,
    pub multiplier_hi: f64,
    /// Accept the multiplier once the achieved cost is this close to the budget.
    pub bisection_tol: f64,
    pub refinement_levels: usize,
    /// Two consecutive level estimates closer than this flag saturation.
    pub saturation_threshold: f64,
    /// Tail mass the coarsest level may ignore, halved per level; each level
    /// widens the input range to the Markov radius for its mass.
    pub widen_tail_mass: f64,
    /// Weights below this are dropped from the reported input.
    pub trim_floor: f64,
    pub quadrature: QuadratureConfig,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            grid_min: -8.0,
            grid_max: 8.0,
            grid_points: 129,
            y_grid_points: 128,
            ba_tol: 1e-9,
            ba_max_iter: 5000,
            multiplier_lo: 0.0,
            multiplier_hi: 1.0,
            bisection_tol: 1e-6,
            refinement_levels: 3,
            saturation_threshold: 0.01,
            widen_tail_mass: 0.1,
            trim_floor: 1e-10,
            // The re-evaluation integrates a mixture with one bump per
            // surviving input point; wide-distortion channels produce
            // hundreds of separated bumps, each wanting its own panels.
            quadrature: QuadratureConfig {
                abs_tol: 1e-9,
                rel_tol: 1e-9,
                max_subdivisions: 20_000,
                ..QuadratureConfig::default()
            },
        }
    }
}

fn validate_config(cfg: &SolverConfig) -> Result<()> {
    if !(cfg.grid_min < cfg.grid_max) || !cfg.grid_min.is_finite() || !cfg.grid_max.is_finite() {
        return Err(Error::InvalidInput(format!(
            "grid range [{}, {}] is not a finite, ordered interval",
            cfg.grid_min, cfg.grid_max
        )));
    }
    if cfg.grid_points < 2 || cfg.y_grid_points < 2 {
        return Err(Error::InvalidInput(
            "need at least two grid points on each axis".into(),
        ));
    }
    if !(cfg.ba_tol > 0.0) || cfg.ba_max_iter == 0 {
        return Err(Error::InvalidInput(
            "iteration tolerance must be positive and the cap nonzero".into(),
        ));
    }
    if !(cfg.multiplier_lo >= 0.0) || !(cfg.multiplier_hi > cfg.multiplier_lo) {
        return Err(Error::InvalidInput(format!(
            "multiplier bracket [{}, {}] must satisfy 0 <= lo < hi",
            cfg.multiplier_lo, cfg.multiplier_hi
        )));
    }
    if !(cfg.bisection_tol > 0.0) || cfg.refinement_levels == 0 {
        return Err(Error::InvalidInput(
            "bisection tolerance must be positive and at least one level requested".into(),
        ));
    }
    if !(cfg.widen_tail_mass > 0.0 && cfg.widen_tail_mass < 1.0) {
        return Err(Error::InvalidInput(format!(
            "tail mass must lie in (0,1), got {}",
            cfg.widen_tail_mass
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Discretized kernel
// ---------------------------------------------------------------------------

struct Kernel {
    /// Window probabilities per input point, each row summing to one.
    rows: Vec<Vec<f64>>,
    row_logs: Vec<Vec<f64>>,
    /// Global column of each row's first lattice site.
    row_col0: Vec<usize>,
    n_cols: usize,
    costs: Vec<f64>,
}

fn lattice_pitch(span: f64, y_points: usize) -> Result<f64> {
    if !(span > 0.0 && span.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "noise window span {span:e} is degenerate"
        )));
    }
    let pitch = (span / y_points as f64).log2().floor().exp2();
    if !(pitch > 0.0 && pitch.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "no representable lattice pitch for span {span:e}"
        )));
    }
    Ok(pitch)
}

fn noise_window(ch: &ChannelSpec) -> Result<(f64, f64)> {
    let qlo = ch.noise().quantile(1e-8)?;
    let qhi = ch.noise().quantile(1.0 - 1e-8)?;
    Ok((qlo, qhi))
}

fn build_kernel(ch: &ChannelSpec, grid: &[f64], cfg: &SolverConfig) -> Result<Kernel> {
    let (qlo, qhi) = noise_window(ch)?;
    let pitch = lattice_pitch(qhi - qlo, cfg.y_grid_points)?;
    let wl = (qlo / pitch).floor() as i64;
    let wh = (qhi / pitch).ceil() as i64;
    let width = (wh - wl + 1) as usize;

    let mut centers = Vec::with_capacity(grid.len());
    let mut resids = Vec::with_capacity(grid.len());
    for &x in grid {
        let fx = ch.f().eval(x);
        let scaled = fx / pitch;
        if !scaled.is_finite() || scaled.abs() > 8.0e37 {
            return Err(Error::InvalidInput(format!(
                "f({x}) = {fx:e} overflows the output lattice (pitch {pitch:e})"
            )));
        }
        let c = scaled.round();
        centers.push(c as i128);
        // Exact: c * pitch only shifts the exponent, and for outputs past 2^53
        // scaled.round() == scaled so the product reproduces fx bit for bit.
        resids.push(fx - c * pitch);
    }

    let mut spans: Vec<(i128, i128)> = centers
        .iter()
        .map(|&c| (c + wl as i128, c + wh as i128))
        .collect();
    spans.sort_unstable();
    let mut runs: Vec<(i128, i128)> = Vec::new();
    for (s, e) in spans {
        match runs.last_mut() {
            Some(last) if s <= last.1 + 1 => last.1 = last.1.max(e),
            _ => runs.push((s, e)),
        }
    }
    let mut run_col0 = Vec::with_capacity(runs.len());
    let mut total = 0usize;
    for &(s, e) in &runs {
        run_col0.push(total);
        total += (e - s + 1) as usize;
    }

    let mut rows = Vec::with_capacity(grid.len());
    let mut row_logs = Vec::with_capacity(grid.len());
    let mut row_col0 = Vec::with_capacity(grid.len());
    for (i, &center) in centers.iter().enumerate() {
        let start = center + wl as i128;
        let r = runs.partition_point(|run| run.0 <= start) - 1;
        row_col0.push(run_col0[r] + (start - runs[r].0) as usize);
        let mut row: Vec<f64> = (0..width)
            .map(|k| ch.noise().pdf((wl + k as i64) as f64 * pitch - resids[i]) * pitch)
            .collect();
        let sum: f64 = row.iter().sum();
        if !(sum > 0.0) {
            return Err(Error::InvalidInput(format!(
                "noise window at x = {} carries no mass on the lattice",
                grid[i]
            )));
        }
        for p in &mut row {
            *p /= sum;
        }
        row_logs.push(row.iter().map(|p| p.ln()).collect());
        rows.push(row);
    }

    Ok(Kernel {
        rows,
        row_logs,
        row_col0,
        n_cols: total,
        costs: grid.iter().map(|&x| ch.cost().eval_abs(x)).collect(),
    })
}

// ---------------------------------------------------------------------------
// Blahut-Arimoto at a fixed multiplier
// ---------------------------------------------------------------------------

/// Outcome of one Blahut-Arimoto run at a fixed cost multiplier.
#[derive(Clone, Debug)]
pub struct BaSolution {
    /// Input weights over the grid, in grid order.
    pub weights: Vec<f64>,
    /// Discretized mutual information at those weights, in nats.
    pub information: f64,
    /// Average input cost at those weights.
    pub cost: f64,
    pub iterations: usize,
    /// False when the iteration cap was reached before the increment
    /// tolerance; the result is still the best sweep reached.
    pub converged: bool,
}

fn ba_on_kernel(
    kernel: &Kernel,
    s: f64,
    budget: f64,
    cfg: &SolverConfig,
    init: Option<&[f64]>,
) -> BaSolution {
    let n = kernel.rows.len();
    let mut w: Vec<f64> = match init {
        // Blend a little of the flat law back in so no support point arrives
        // dead; a multiplicative update can never revive an exact zero.
        Some(prev) => {
            let u = 1.0 / n as f64;
            prev.iter().map(|p| 0.999 * p + 0.001 * u).collect()
        }
        None => vec![1.0 / n as f64; n],
    };
    let mut q = vec![0.0f64; kernel.n_cols];
    let mut lnq = vec![0.0f64; kernel.n_cols];
    let mut d = vec![0.0f64; n];
    let mut info = 0.0;
    let mut cost = 0.0;
    let mut j_prev = f64::NEG_INFINITY;
    let mut iterations = 0;
    let mut converged = false;

    for iter in 1..=cfg.ba_max_iter {
        iterations = iter;
        q.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..n {
            let wi = w[i];
            if wi == 0.0 {
                continue;
            }
            let c0 = kernel.row_col0[i];
            for (k, p) in kernel.rows[i].iter().enumerate() {
                q[c0 + k] += wi * p;
            }
        }
        for (dst, qj) in lnq.iter_mut().zip(&q) {
            // Columns no live row touches have q = 0; floor the log so a dead
            // row's divergence stays finite instead of poisoning the update.
            *dst = if *qj > 0.0 { qj.ln() } else { -745.0 };
        }
        let lnq_ref = &lnq;
        (0..n)
            .into_par_iter()
            .map(|i| {
                let c0 = kernel.row_col0[i];
                let mut acc = 0.0;
                for (k, (&p, &lp)) in kernel.rows[i].iter().zip(&kernel.row_logs[i]).enumerate() {
                    if p > 0.0 {
                        acc += p * (lp - lnq_ref[c0 + k]);
                    }
                }
                acc
            })
            .collect_into_vec(&mut d);

        info = w.iter().zip(&d).map(|(wi, di)| wi * di).sum();
        cost = w.iter().zip(&kernel.costs).map(|(wi, ci)| wi * ci).sum();
        let j_now = info - s * (cost - budget);
        assert!(
            j_now >= j_prev - 1e-12 * (1.0 + j_now.abs()),
            "Lagrangian decreased across a sweep: {j_prev} -> {j_now}"
        );
        if j_now - j_prev < cfg.ba_tol {
            converged = true;
            break;
        }
        j_prev = j_now;

        let mut m = f64::NEG_INFINITY;
        for i in 0..n {
            if w[i] > 0.0 {
                m = m.max(d[i] - s * kernel.costs[i]);
            }
        }
        let mut sum = 0.0;
        for i in 0..n {
            if w[i] > 0.0 {
                w[i] *= (d[i] - s * kernel.costs[i] - m).exp();
                sum += w[i];
            }
        }
        for wi in &mut w {
            *wi /= sum;
        }
    }

    BaSolution {
        weights: w,
        information: info,
        cost,
        iterations,
        converged,
    }
}

/// One Blahut-Arimoto run at fixed cost multiplier `s` over an explicit input
/// grid. The weights maximize `I(w) - s (E[cost] - budget)`; hitting the
/// iteration cap flags the result rather than discarding it.
pub fn ba_solve_fixed_multiplier(
    ch: &ChannelSpec,
    grid: &[f64],
    s: f64,
    cfg: &SolverConfig,
) -> Result<BaSolution> {
    validate_config(cfg)?;
    if grid.is_empty() {
        return Err(Error::InvalidInput("input grid is empty".into()));
    }
    if grid.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput(
            "input grid has non-finite points".into(),
        ));
    }
    if grid.windows(2).any(|p| p[0] >= p[1]) {
        return Err(Error::InvalidInput(
            "input grid must be strictly increasing".into(),
        ));
    }
    if !(s >= 0.0 && s.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "multiplier must be finite and nonnegative, got {s}"
        )));
    }
    let kernel = build_kernel(ch, grid, cfg)?;
    Ok(ba_on_kernel(&kernel, s, ch.budget(), cfg, None))
}

// ---------------------------------------------------------------------------
// Multiplier search
// ---------------------------------------------------------------------------

/// Bisection on the cost multiplier. `sol_lo` is the solution at
/// `cfg.multiplier_lo` and must exceed the budget. Returns the smallest
/// multiplier found whose solution is feasible, preferring one whose cost is
/// within `bisection_tol` of the budget; the achieved cost never exceeds it.
fn bisect_multiplier(
    kernel: &Kernel,
    budget: f64,
    cfg: &SolverConfig,
    sol_lo: BaSolution,
) -> Result<(f64, BaSolution, usize)> {
    let mut iterations = 0usize;
    let mut s_lo = cfg.multiplier_lo;
    let mut s_hi = cfg.multiplier_hi;
    let cost_at_lo = sol_lo.cost;
    let mut warm = sol_lo.weights;
    let mut sol_hi = ba_on_kernel(kernel, s_hi, budget, cfg, Some(&warm));
    iterations += sol_hi.iterations;
    let mut doublings = 0;
    while sol_hi.cost > budget {
        if doublings >= 30 {
            return Err(Error::BracketFailure(format!(
                "no multiplier in [{:e}, {:e}] meets the budget {:e}: cost {:e} at the low end, {:e} at the high end",
                s_lo, s_hi, budget, cost_at_lo, sol_hi.cost
            )));
        }
        s_lo = s_hi;
        s_hi *= 2.0;
        doublings += 1;
        warm = sol_hi.weights;
        sol_hi = ba_on_kernel(kernel, s_hi, budget, cfg, Some(&warm));
        iterations += sol_hi.iterations;
    }
    let mut rounds = 0;
    while sol_hi.cost < budget - cfg.bisection_tol
        && s_hi - s_lo > 1e-12 * (1.0 + s_hi)
        && rounds < 200
    {
        let mid = 0.5 * (s_lo + s_hi);
        let sol_mid = ba_on_kernel(kernel, mid, budget, cfg, Some(&sol_hi.weights));
        iterations += sol_mid.iterations;
        if sol_mid.cost <= budget {
            s_hi = mid;
            sol_hi = sol_mid;
        } else {
            s_lo = mid;
        }
        rounds += 1;
    }
    Ok((s_hi, sol_hi, iterations))
}

// ---------------------------------------------------------------------------
// Capacity with refinement
// ---------------------------------------------------------------------------

/// Capacity estimate with its supporting evidence.
#[derive(Clone, Debug)]
pub struct CapacityResult {
    /// Mutual information of `optimal_input` through the exact channel,
    /// re-evaluated by continuous quadrature at the finest level.
    pub capacity_estimate: f64,
    pub optimal_input: DiscreteInput,
    /// Cost multiplier at the finest level; zero when the unconstrained
    /// optimum already fits the budget.
    pub multiplier: f64,
    pub achieved_cost: f64,
    /// Blahut-Arimoto sweeps summed over all levels and bisection rounds.
    pub iterations: usize,
    /// Continuous re-evaluation at each refinement level, coarsest first.
    pub per_level_estimates: Vec<f64>,
    /// Whether the last two levels agree within the saturation threshold.
    /// A channel whose capacity the widening keeps discovering stays false.
    pub saturated: bool,
    /// The finest level's discretized estimate, for consistency checks
    /// against `capacity_estimate`.
    pub discretized_estimate: f64,
    pub notes: Vec<String>,
}

/// Cost-constrained capacity by refinement: at each level the input range is
/// widened to the Markov radius for a halving tail mass, the point count is
/// doubled, and the multiplier re-bisected; each level's law is re-evaluated
/// through continuous quadrature.
pub fn solve_capacity(ch: &ChannelSpec, cfg: &SolverConfig) -> Result<CapacityResult> {
    validate_config(cfg)?;
    let budget = ch.budget();
    let mut notes: Vec<String> = vec!["input-law uniqueness not assessed".into()];

    let (qlo, qhi) = noise_window(ch)?;
    let pitch = lattice_pitch(qhi - qlo, cfg.y_grid_points)?;
    // Largest |x| the solver can afford to visit. The index lattice carries
    // the kernel exactly up to i128 range, but the continuous re-evaluation
    // works in plain f64 output coordinates, where a bump at c is invisible
    // once ulp(c) rivals the noise width. Cap where ulp stays four decades
    // under the window.
    let y_limit = (pitch * 8.0e37)
        .min((qhi - qlo) * 2f64.powi(52) * 1e-4)
        .min(1e300);
    let x_cap = match z_of_y(ch.f(), y_limit) {
        Ok(z) => z,
        Err(_) => f64::INFINITY,
    };

    let mut per_level = Vec::with_capacity(cfg.refinement_levels);
    let mut iterations = 0usize;
    let mut finest: Option<(DiscreteInput, f64, f64)> = None;
    let mut clamp_noted = false;
    let mut widen_noted = false;

    for level in 0..cfg.refinement_levels {
        let eps = cfg.widen_tail_mass / 2f64.powi(level as i32);
        let radius = match markov_tightness_bound(ch.cost(), budget, eps) {
            Ok(r) => r,
            Err(_) => {
                if !widen_noted {
                    notes.push(
                        "cost never reaches the widening target; range left at its base".into(),
                    );
                    widen_noted = true;
                }
                0.0
            }
        };
        let mut lo = cfg.grid_min.min(-radius);
        let mut hi = cfg.grid_max.max(radius);
        if lo < -x_cap || hi > x_cap {
            lo = lo.max(-x_cap);
            hi = hi.min(x_cap);
            if !clamp_noted {
                notes.push(format!(
                    "input range clamped to [{lo:.3}, {hi:.3}] so every output window stays on the index lattice"
                ));
                clamp_noted = true;
            }
        }
        let n = cfg.grid_points << level;
        let grid: Vec<f64> = (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect();

        let kernel = build_kernel(ch, &grid, cfg)?;
        let sol0 = ba_on_kernel(&kernel, cfg.multiplier_lo, budget, cfg, None);
        iterations += sol0.iterations;
        let (s, sol) = if sol0.cost <= budget {
            (cfg.multiplier_lo, sol0)
        } else {
            let (s, sol, extra) = bisect_multiplier(&kernel, budget, cfg, sol0)?;
            iterations += extra;
            (s, sol)
        };
        if !sol.converged {
            notes.push(format!(
                "level {level}: iteration cap {} reached before the increment tolerance",
                cfg.ba_max_iter
            ));
        }
        if s > cfg.multiplier_lo && sol.cost < budget - cfg.bisection_tol {
            notes.push(format!(
                "level {level}: cost jumps across the budget; settled on the feasible side at {:e}",
                sol.cost
            ));
        }

        let input = DiscreteInput::new(grid, sol.weights)?.trimmed(cfg.trim_floor)?;
        let mi = ch.mutual_information(&input, &cfg.quadrature)?;
        per_level.push(mi);
        finest = Some((input, s, sol.information));
    }

    let (optimal_input, multiplier, discretized_estimate) = finest.expect("at least one level");
    let achieved_cost = ch.input_cost(&optimal_input);
    let k = per_level.len();
    let saturated =
        k >= 2 && (per_level[k - 1] - per_level[k - 2]).abs() < cfg.saturation_threshold;

    Ok(CapacityResult {
        capacity_estimate: per_level[k - 1],
        optimal_input,
        multiplier,
        achieved_cost,
        iterations,
        per_level_estimates: per_level,
        saturated,
        discretized_estimate,
        notes,
    })
}

/// `solve_capacity` across strictly increasing budgets, enforcing that the
/// estimates never decrease (beyond 1e-6 slack) as the budget relaxes.
pub fn capacity_vs_budget(
    ch: &ChannelSpec,
    budgets: &[f64],
    cfg: &SolverConfig,
) -> Result<Vec<CapacityResult>> {
    if budgets.is_empty() {
        return Err(Error::InvalidInput("no budgets given".into()));
    }
    if budgets.windows(2).any(|p| p[0] >= p[1]) || budgets.iter().any(|a| !(*a > 0.0)) {
        return Err(Error::InvalidInput(
            "budgets must be positive and strictly increasing".into(),
        ));
    }
    let mut out = Vec::with_capacity(budgets.len());
    for &a in budgets {
        let r = solve_capacity(&ch.with_budget(a)?, cfg)?;
        if let Some(prev) = out.last().map(|p: &CapacityResult| p.capacity_estimate) {
            if r.capacity_estimate < prev - 1e-6 {
                return Err(Error::SpecValidation(format!(
                    "capacity estimate fell from {prev:.9} to {:.9} as the budget grew to {a}",
                    r.capacity_estimate
                )));
            }
        }
        out.push(r);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
