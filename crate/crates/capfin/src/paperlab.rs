//! Closed-form reproduction of the two counterexample constructions that the
//! rest of the crate checks itself against.
//!
//! The first is a density family on [0, m] whose entropies converge to 1/2
//! while the pointwise limit (uniform on [0,1]) has entropy 0: entropy is not
//! continuous under pointwise convergence once the uniform moment condition
//! fails. The second is a pair of integer-valued inputs with mass
//! proportional to 1/(k lnᶦ⁺¹ k); the entropy series diverges for i = 1 and
//! converges for i = 2, diagnosed here through certified partial sums.
//!
//! Partial-sum constants below were frozen from an independent brute-force
//! oracle before this module was written; the tests pin them.

use crate::channel::{make_distortion, ChannelSpec, DiscreteInput};
use crate::density::{Density, Pdf};
use crate::moments::{make_moment_fn, MomentFunction};
use crate::quadrature::QuadratureConfig;
use crate::{Error, Interval, Result};

// ---------------------------------------------------------------------------
// Example family 1: entropy 1/2 in the limit, pointwise limit U[0,1]
// ---------------------------------------------------------------------------

/// Density with value 1 − 1/ln m on [0,1] and 1/((ln m)² x) on (1, m].
pub struct Example1Pdf {
    m: u64,
    log_m: f64,
}

impl Example1Pdf {
    fn plateau(&self) -> f64 {
        1.0 - 1.0 / self.log_m
    }
}

impl Pdf for Example1Pdf {
    fn pdf(&self, y: f64) -> f64 {
        if (0.0..=1.0).contains(&y) {
            self.plateau()
        } else if y > 1.0 && y <= self.m as f64 {
            1.0 / (self.log_m * self.log_m * y)
        } else {
            0.0
        }
    }
    fn log_pdf(&self, y: f64) -> f64 {
        if (0.0..=1.0).contains(&y) {
            self.plateau().ln()
        } else if y > 1.0 && y <= self.m as f64 {
            -2.0 * self.log_m.ln() - y.ln()
        } else {
            f64::NEG_INFINITY
        }
    }
    fn cdf(&self, y: f64) -> f64 {
        if y <= 0.0 {
            0.0
        } else if y <= 1.0 {
            self.plateau() * y
        } else if y <= self.m as f64 {
            self.plateau() + y.ln() / (self.log_m * self.log_m)
        } else {
            1.0
        }
    }
    fn support(&self) -> Interval {
        Interval::new(0.0, self.m as f64)
    }
    fn sup_bound(&self) -> f64 {
        // Declared bound; the actual sup max(1 − 1/ln m, 1/ln²m) is below 1.
        1.0
    }
    fn discontinuities(&self) -> Vec<f64> {
        vec![0.0, 1.0, self.m as f64]
    }
    fn analytic_entropy(&self) -> Option<f64> {
        Some(example1_entropy_closed_form(self.m))
    }
    fn family(&self) -> &'static str {
        "example1"
    }
    fn params(&self) -> Vec<f64> {
        vec![self.m as f64]
    }
}

/// The m-th member of the family. Needs m ≥ 3 so ln m > 1.
pub fn example1_density(m: u64) -> Result<Density> {
    if m < 3 {
        return Err(Error::InvalidParameter {
            name: "m",
            reason: format!("family needs m >= 3, got {m}"),
        });
    }
    Ok(Density::from_pdf(Example1Pdf {
        m,
        log_m: (m as f64).ln(),
    }))
}

/// h(p_m) = −(1 − 1/ln m) ln(1 − 1/ln m) + 2 ln(ln m)/ln m + 1/2.
pub fn example1_entropy_closed_form(m: u64) -> f64 {
    let l = (m as f64).ln();
    let a = 1.0 - 1.0 / l;
    -a * a.ln() + 2.0 * l.ln() / l + 0.5
}

/// Lower bound κ((ln m)² − (ln c)²)/(2 (ln m)²) on E_{p_m}[l(|X|)], valid
/// whenever l(x) ≥ κ ln x on [c, m]; that evidence is sampled on a geometric
/// grid before the value is released. The bound exceeds 3κ/8 once m > c².
/// `m` is real-valued here so threshold cases like m = e⁴ can be probed.
pub fn example1_c2_lower_bound(l: &MomentFunction, kappa: f64, c: f64, m: f64) -> Result<f64> {
    if !(kappa > 0.0 && c >= 1.0 && m > c * c) {
        return Err(Error::InvalidInput(format!(
            "need kappa > 0, c >= 1 and m > c^2; got kappa = {kappa}, c = {c}, m = {m}"
        )));
    }
    let points = 512;
    let ratio = (m / c).powf(1.0 / (points - 1) as f64);
    for idx in 0..points {
        let x = c * ratio.powi(idx as i32);
        if l.eval(x) < kappa * x.ln() * (1.0 - 1e-12) {
            return Err(Error::SpecValidation(format!(
                "evidence missing: {:?} < {kappa} ln x at x = {x}",
                l
            )));
        }
    }
    let lm = m.ln();
    let lc = c.ln();
    Ok(kappa * (lm * lm - lc * lc) / (2.0 * lm * lm))
}

// ---------------------------------------------------------------------------
// Example family 2: discrete inputs with log-power masses
// ---------------------------------------------------------------------------

fn validate_example2(i: u32, k_max: u64) -> Result<()> {
    if i != 1 && i != 2 {
        return Err(Error::InvalidParameter {
            name: "i",
            reason: format!("index must be 1 or 2, got {i}"),
        });
    }
    if k_max < 2 {
        return Err(Error::InvalidParameter {
            name: "K",
            reason: format!("truncation must be at least 2, got {k_max}"),
        });
    }
    Ok(())
}

fn mass(i: u32, k: u64) -> f64 {
    let lk = (k as f64).ln();
    1.0 / (k as f64 * lk.powi(1 + i as i32))
}

#[derive(Default)]
struct Acc {
    s: f64,
    c: f64,
}

impl Acc {
    fn add(&mut self, v: f64) {
        let t = self.s + v;
        self.c += if self.s.abs() >= v.abs() {
            (self.s - t) + v
        } else {
            (v - t) + self.s
        };
        self.s = t;
    }
    fn value(&self) -> f64 {
        self.s + self.c
    }
}

/// Truncation of the unnormalized masses 1/(k lnᶦ⁺¹ k), k = 2..K, with the
/// reciprocal partial sum and a closed-form bound on the discarded tail.
#[derive(Clone, Debug)]
pub struct Example2Pmf {
    pub i: u32,
    pub k_max: u64,
    /// Unnormalized masses for k = 2..=k_max, in k order.
    pub unnormalized: Vec<f64>,
    /// Reciprocal of the partial sum: the truncated normalizer.
    pub b_partial: f64,
    /// ∫_K^∞ dx/(x lnᶦ⁺¹ x) = 1/(i lnᶦ K): certifies how far b_partial can
    /// sit from the true normalizer.
    pub tail_integral_bound: f64,
}

impl Example2Pmf {
    /// (point, probability) pairs of the truncated, renormalized pmf.
    pub fn normalized(&self) -> Vec<(f64, f64)> {
        self.unnormalized
            .iter()
            .enumerate()
            .map(|(idx, a)| ((idx as u64 + 2) as f64, self.b_partial * a))
            .collect()
    }
}

pub fn example2_pmf(i: u32, k_max: u64) -> Result<Example2Pmf> {
    validate_example2(i, k_max)?;
    let mut masses = Vec::with_capacity((k_max - 1) as usize);
    let mut sum = Acc::default();
    for k in 2..=k_max {
        let a = mass(i, k);
        masses.push(a);
        sum.add(a);
    }
    let lk = (k_max as f64).ln();
    Ok(Example2Pmf {
        i,
        k_max,
        unnormalized: masses,
        b_partial: 1.0 / sum.value(),
        tail_integral_bound: 1.0 / (i as f64 * lk.powi(i as i32)),
    })
}

/// Entropy of the truncated, renormalized pmf, computed in streaming form as
/// ln S + T/S with S = Σ aₖ and T = Σ aₖ(ln k + (1+i) ln ln k). For i = 1
/// the values grow without saturation as K increases; for i = 2 they settle.
pub fn example2_entropy_partial(i: u32, k_max: u64) -> Result<f64> {
    validate_example2(i, k_max)?;
    let mut s = Acc::default();
    let mut t = Acc::default();
    for k in 2..=k_max {
        let lk = (k as f64).ln();
        let a = mass(i, k);
        s.add(a);
        t.add(a * (lk + (1.0 + i as f64) * lk.ln()));
    }
    let s = s.value();
    Ok(s.ln() + t.value() / s)
}

/// The truncated input pushed through the identity channel with U[0,1)
/// noise: outputs occupy disjoint unit slabs, the input is recoverable from
/// the output, and the mutual information equals the discrete entropy of the
/// truncated pmf. Computed here with the continuous machinery so the two
/// routes can be compared.
pub fn example2_channel_mi(i: u32, k_max: u64, cfg: &QuadratureConfig) -> Result<f64> {
    let pmf = example2_pmf(i, k_max)?;
    let (points, weights): (Vec<f64>, Vec<f64>) = pmf.normalized().into_iter().unzip();
    let input = DiscreteInput::new(points, weights)?;
    let ch = ChannelSpec::new(
        make_distortion("identity", &[])?,
        crate::density::make_density("uniform", &[0.0, 1.0])?,
        make_moment_fn("zero", &[])?,
        make_moment_fn("log_power", &[2.0])?,
        1.0,
        cfg,
    )?;
    ch.mutual_information(&input, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::make_density;
    use crate::entropy::{differential_entropy, discrete_entropy};
    use crate::quadrature::integrate;
    use crate::testutil::assert_close;
    use std::f64::consts::E;

    fn cfg() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    // Frozen from the brute-force oracle (streaming compensated sums).
    const H1_ORACLE: [(u64, f64); 4] = [
        (1_000, 2.265504446625684),
        (10_000, 2.473564373531373),
        (100_000, 2.625532113886079),
        (1_000_000, 2.744482434103871),
    ];
    const H2_ORACLE: [(u64, f64); 4] = [
        (1_000, 1.207830449852112),
        (10_000, 1.240304622254425),
        (100_000, 1.258504296749066),
        (1_000_000, 1.270019199312466),
    ];

    #[test]
    fn density_formula_spot_values() {
        let d = example1_density(3).unwrap();
        assert_close(
            d.pdf(0.5),
            1.0 - 1.0 / 3.0f64.ln(),
            1e-15,
            "plateau at m = 3",
        );
        assert_close(d.pdf(0.5), 0.089760, 1e-5, "plateau decimal");
        assert_eq!(d.pdf(4.0), 0.0, "outside support");
        let d = example1_density(100).unwrap();
        let l = 100.0f64.ln();
        assert_close(d.pdf(2.0), 1.0 / (l * l * 2.0), 1e-15, "tail at m = 100");
        assert_close(d.pdf(2.0), 0.023577, 1e-5, "tail decimal");
        assert!(example1_density(2).is_err());
    }

    #[test]
    fn family_normalizes_exactly() {
        for m in [3, 100, 10_000] {
            let d = example1_density(m).unwrap();
            let r = integrate(|y| d.pdf(y), d.support(), &d.discontinuities(), &cfg()).unwrap();
            assert!(r.converged);
            assert_close(r.value, 1.0, 1e-10, &format!("mass at m = {m}"));
        }
    }

    #[test]
    fn quadrature_meets_closed_form() {
        for m in [3u64, 10, 100, 10_000] {
            let d = example1_density(m).unwrap();
            let h = differential_entropy(&d, &cfg()).unwrap();
            assert_close(
                h,
                example1_entropy_closed_form(m),
                1e-8,
                &format!("entropy at m = {m}"),
            );
        }
    }

    #[test]
    fn closed_form_frozen_values() {
        assert_close(
            example1_entropy_closed_form(3),
            0.887590012228384,
            1e-12,
            "m=3",
        );
        assert_close(
            example1_entropy_closed_form(10),
            1.546703414648702,
            1e-12,
            "m=10",
        );
        assert_close(
            example1_entropy_closed_form(100),
            1.354896375490384,
            1e-12,
            "m=100",
        );
        assert_close(
            example1_entropy_closed_form(1_000_000_000),
            0.839617746336390,
            1e-12,
            "m=1e9",
        );
    }

    #[test]
    fn entropy_splits_into_vanishing_terms_plus_half() {
        // The two m-dependent terms shrink; what persists is exactly 1/2,
        // far from the limit density's entropy 0.
        for m in [1_000u64, 1_000_000_000] {
            let l = (m as f64).ln();
            let a = 1.0 - 1.0 / l;
            let h = example1_entropy_closed_form(m);
            assert_close(
                h - (-a * a.ln()) - 2.0 * l.ln() / l,
                0.5,
                1e-12,
                "persistent component",
            );
        }
        let limit = make_density("uniform", &[0.0, 1.0]).unwrap();
        assert_eq!(limit.analytic_entropy(), Some(0.0));
    }

    #[test]
    fn entropy_gap_to_limit_stays_wide() {
        for m in [10_000u64, 1_000_000] {
            let h = example1_entropy_closed_form(m);
            assert!((h - 0.0).abs() > 0.4, "gap at m = {m} collapsed: h = {h}");
        }
    }

    #[test]
    fn c2_lower_bound_arithmetic() {
        // l(x) = x dominates 2 ln x on [e, e^4].
        let lin = make_moment_fn("power", &[1.0]).unwrap();
        let b = example1_c2_lower_bound(&lin, 2.0, E, E.powi(4)).unwrap();
        assert_close(b, 0.9375, 1e-12, "kappa 2, c e, m e^4");
    }

    #[test]
    fn c2_lower_bound_exceeds_three_eighths_past_c_squared() {
        let lsq = make_moment_fn("log_power", &[2.0]).unwrap();
        let kappa = 1.0;
        let b = example1_c2_lower_bound(&lsq, kappa, E, E * E + 1.0).unwrap();
        assert!(b > 3.0 * kappa / 8.0, "boundary bound {b}");
        let b = example1_c2_lower_bound(&lsq, kappa, E, 1e12).unwrap();
        assert_close(b, kappa / 2.0, 1e-3, "large-m limit");
        assert!(
            example1_c2_lower_bound(&lsq, kappa, E, E).is_err(),
            "m <= c^2"
        );
    }

    #[test]
    fn c2_lower_bound_requires_evidence() {
        // ln(1+y) never dominates 2 ln x, so the bound must refuse.
        let l1 = make_moment_fn("log_power", &[1.0]).unwrap();
        assert!(matches!(
            example1_c2_lower_bound(&l1, 2.0, E, 1e6),
            Err(Error::SpecValidation(_))
        ));
    }

    #[test]
    fn pmf_single_term_case() {
        let p = example2_pmf(2, 2).unwrap();
        assert_eq!(p.unnormalized.len(), 1);
        let ln2 = 2.0f64.ln();
        assert_close(
            p.unnormalized[0],
            1.0 / (2.0 * ln2.powi(3)),
            1e-15,
            "mass at 2",
        );
        assert_close(p.b_partial, 2.0 * ln2.powi(3), 1e-15, "normalizer");
        assert_close(p.b_partial, 0.6660493039778589, 1e-12, "frozen normalizer");
    }

    #[test]
    fn pmf_tail_bound_and_monotonicity() {
        let p = example2_pmf(1, 1_000_000).unwrap();
        assert_close(
            p.tail_integral_bound,
            0.07238241365054197,
            1e-12,
            "tail at 1e6",
        );
        let p = example2_pmf(1, 200).unwrap();
        for w in p.unnormalized[1..].windows(2) {
            assert!(w[1] < w[0], "masses must decrease from k = 3 on");
        }
        let total: f64 = p.normalized().iter().map(|(_, q)| q).sum();
        assert_close(total, 1.0, 1e-12, "renormalized mass");
        assert!(example2_pmf(3, 10).is_err());
        assert!(example2_pmf(1, 1).is_err());
    }

    #[test]
    fn entropy_partial_matches_discrete_entropy_of_truncation() {
        for i in [1, 2] {
            let h_stream = example2_entropy_partial(i, 1000).unwrap();
            let pmf = example2_pmf(i, 1000).unwrap();
            let h_direct = discrete_entropy(&pmf.normalized(), true).unwrap();
            assert_close(h_stream, h_direct, 1e-11, &format!("two routes, i = {i}"));
        }
    }

    #[test]
    fn entropy_partial_single_point_is_zero() {
        let h = example2_entropy_partial(2, 2).unwrap();
        assert_close(h, 0.0, 1e-12, "point mass entropy");
    }

    #[test]
    fn divergent_series_keeps_climbing() {
        let mut prev_inc = f64::INFINITY;
        for (pair, floor) in H1_ORACLE.windows(2).zip([0.1, 0.1, 0.1]) {
            let (k0, _) = pair[0];
            let (k1, _) = pair[1];
            let inc =
                example2_entropy_partial(1, k1).unwrap() - example2_entropy_partial(1, k0).unwrap();
            assert!(inc > floor, "increment {inc} at {k0}->{k1} under floor");
            assert!(inc < prev_inc, "increments should shrink slowly");
            prev_inc = inc;
        }
        for (k, h) in H1_ORACLE {
            assert_close(
                example2_entropy_partial(1, k).unwrap(),
                h,
                1e-9,
                &format!("frozen i=1 partial at K = {k}"),
            );
        }
    }

    #[test]
    fn convergent_series_settles() {
        for (k, h) in H2_ORACLE {
            assert_close(
                example2_entropy_partial(2, k).unwrap(),
                h,
                1e-9,
                &format!("frozen i=2 partial at K = {k}"),
            );
        }
        // Increments shrink toward zero; they cross 0.01 one decade past the
        // oracle table.
        let h5 = H2_ORACLE[2].1;
        let h6 = H2_ORACLE[3].1;
        assert_close(h6 - h5, 0.011514903, 1e-7, "frozen 1e5 -> 1e6 increment");
        let h7 = example2_entropy_partial(2, 10_000_000).unwrap();
        assert_close(h7 - h6, 0.007889385, 1e-7, "frozen 1e6 -> 1e7 increment");
        assert!(h7 - h6 < 0.01);
    }

    #[test]
    fn channel_mi_equals_partial_entropy() {
        let h = example2_entropy_partial(2, 12).unwrap();
        let mi = example2_channel_mi(2, 12, &cfg()).unwrap();
        assert_close(mi, h, 1e-6, "continuous MI vs discrete entropy");
        let mi = example2_channel_mi(2, 2, &cfg()).unwrap();
        assert_close(mi, 0.0, 1e-8, "single-point truncation");
    }
}
