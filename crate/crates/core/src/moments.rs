//! Closed-form moments of the number of missed items `X`.
//!
//! For the fixed-sample posterior
//! `P(X) ∝ (X + x_a)! (X + x_b)! / (X! (X + n_f)!)` the factorial moments
//! have the product form
//!
//! ```text
//! E[X (X-1) ... (X-k+1)] = Π_{i=1..k} (x_a + i)(x_b + i) / (n_ab - 1 - i)
//! ```
//!
//! which exists while `n_ab > k + 1`. Raw moments are Stirling-number
//! combinations of these (`<X^2> = T2 + T1`, `<X^3> = T3 + 3 T2 + T1`,
//! `<X^4> = T4 + 6 T3 + 7 T2 + T1`). Every other scenario is the same
//! posterior with `n_ab` replaced by `n_ab + s` and `x_a`, `x_b` unchanged.
//!
//! Products are accumulated factor by factor, pairing each numerator with a
//! denominator, so no factorial of an observed count is ever formed.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::counts::{Scenario, SearchCounts};

/// A moment that is either a finite value or does not exist because the
/// overlap is too small for the series to converge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Moment {
    Defined { value: f64 },
    /// Undefined; `min_n_ab` is the smallest overlap for which it would exist
    /// under the same scenario.
    Undefined { min_n_ab: u64 },
}

impl Moment {
    pub fn value(&self) -> Option<f64> {
        match self {
            Moment::Defined { value } => Some(*value),
            Moment::Undefined { .. } => None,
        }
    }

    pub fn is_defined(&self) -> bool {
        matches!(self, Moment::Defined { .. })
    }

    pub fn map(self, f: impl FnOnce(f64) -> f64) -> Moment {
        match self {
            Moment::Defined { value } => Moment::Defined { value: f(value) },
            undefined => undefined,
        }
    }
}

impl fmt::Display for Moment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Moment::Defined { value } => write!(f, "{value}"),
            Moment::Undefined { min_n_ab } => write!(f, "undefined (n_ab >= {min_n_ab})"),
        }
    }
}

/// `n_ab + s`, the exponent of the posterior's power-law tail.
pub fn tail_exponent(counts: &SearchCounts, scenario: Scenario) -> u64 {
    counts.n_ab() + u64::from(scenario.shift())
}

/// Smallest `n_ab` for which the `p`-th raw moment exists under `scenario`.
pub fn min_n_ab_for_moment(p: u32, scenario: Scenario) -> u64 {
    u64::from(p + 2).saturating_sub(u64::from(scenario.shift()))
}

fn undefined_unless(counts: &SearchCounts, scenario: Scenario, p: u32) -> Option<Moment> {
    if tail_exponent(counts, scenario) > u64::from(p) + 1 {
        None
    } else {
        Some(Moment::Undefined {
            min_n_ab: min_n_ab_for_moment(p, scenario),
        })
    }
}

/// `k`-th factorial moment `E[X (X-1) ... (X-k+1)]`.
pub fn factorial_moment(counts: &SearchCounts, scenario: Scenario, k: u32) -> Moment {
    if let Some(u) = undefined_unless(counts, scenario, k) {
        return u;
    }
    let m = tail_exponent(counts, scenario) as f64;
    let (xa, xb) = (counts.x_a() as f64, counts.x_b() as f64);
    let mut t = 1.0;
    for i in 1..=k {
        let i = f64::from(i);
        t *= (xa + i) * (xb + i) / (m - 1.0 - i);
    }
    Moment::Defined { value: t }
}

fn stirling2(p: u32, k: u32) -> f64 {
    // S(p, k) by the triangle recurrence; p is tiny in practice.
    let (p, k) = (p as usize, k as usize);
    let mut row = vec![1.0f64];
    for n in 1..=p {
        let mut next = vec![0.0; n + 1];
        for j in 1..=n {
            let from_prev = if j < row.len() { j as f64 * row[j] } else { 0.0 };
            next[j] = from_prev + row[j - 1];
        }
        row = next;
    }
    row.get(k).copied().unwrap_or(0.0)
}

/// Raw moment `<X^p>`; exists when `n_ab + s > p + 1`.
pub fn raw_moment(counts: &SearchCounts, scenario: Scenario, p: u32) -> Moment {
    if let Some(u) = undefined_unless(counts, scenario, p) {
        return u;
    }
    if p == 0 {
        return Moment::Defined { value: 1.0 };
    }
    let mut acc = 0.0;
    for k in 1..=p {
        let t = factorial_moment(counts, scenario, k)
            .value()
            .expect("lower factorial moments exist when the higher one does");
        acc += stirling2(p, k) * t;
    }
    Moment::Defined { value: acc }
}

/// Posterior mean of the missed-item count: `(x_a+1)(x_b+1)/(n_ab+s-2)`.
pub fn mean_exact(counts: &SearchCounts, scenario: Scenario) -> Moment {
    factorial_moment(counts, scenario, 1)
}

/// Posterior variance:
/// `(x_a+1)(x_b+1)(n_a+s-1)(n_b+s-1) / ((n_ab+s-2)^2 (n_ab+s-3))`.
pub fn variance_exact(counts: &SearchCounts, scenario: Scenario) -> Moment {
    if let Some(u) = undefined_unless(counts, scenario, 2) {
        return u;
    }
    let s = f64::from(scenario.shift());
    let m = tail_exponent(counts, scenario) as f64;
    let (xa, xb) = (counts.x_a() as f64, counts.x_b() as f64);
    let na1 = counts.n_a() as f64 + s - 1.0;
    let nb1 = counts.n_b() as f64 + s - 1.0;
    let value = (xa + 1.0) * (xb + 1.0) / ((m - 2.0) * (m - 2.0)) * (na1 * nb1) / (m - 3.0);
    Moment::Defined { value }
}

pub fn sd_exact(counts: &SearchCounts, scenario: Scenario) -> Moment {
    variance_exact(counts, scenario).map(f64::sqrt)
}

/// Skewness `(<X^3> - 3<X^2><X> + 2<X>^3) / <X^2>^{3/2}`.
///
/// The third central moment is normalised by the raw second moment `<X^2>`,
/// not by `σ^3`. Requires `n_ab + s > 4`.
pub fn skewness_exact(counts: &SearchCounts, scenario: Scenario) -> Moment {
    if let Some(u) = undefined_unless(counts, scenario, 3) {
        return u;
    }
    let [m1, m2, m3] = [1, 2, 3].map(|p| raw_moment(counts, scenario, p).value().unwrap());
    Moment::Defined {
        value: skewness_from_raw(m1, m2, m3),
    }
}

/// Kurtosis `(<X^4> - 4<X^3><X> + 6<X^2><X>^2 - 3<X>^4) / <X^2>^2`, again
/// normalised by the raw second moment. Requires `n_ab + s > 5`.
pub fn kurtosis_exact(counts: &SearchCounts, scenario: Scenario) -> Moment {
    if let Some(u) = undefined_unless(counts, scenario, 4) {
        return u;
    }
    let [m1, m2, m3, m4] = [1, 2, 3, 4].map(|p| raw_moment(counts, scenario, p).value().unwrap());
    Moment::Defined {
        value: kurtosis_from_raw(m1, m2, m3, m4),
    }
}

pub fn skewness_from_raw(m1: f64, m2: f64, m3: f64) -> f64 {
    (m3 - 3.0 * m2 * m1 + 2.0 * m1.powi(3)) / m2.powf(1.5)
}

pub fn kurtosis_from_raw(m1: f64, m2: f64, m3: f64, m4: f64) -> f64 {
    (m4 - 4.0 * m3 * m1 + 6.0 * m2 * m1 * m1 - 3.0 * m1.powi(4)) / (m2 * m2)
}

/// Interval bracketing a moment of the full-search posterior with a flat
/// prior on `N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorBracket {
    pub lower: f64,
    pub upper: f64,
    /// The shift-2 moment at the centre of the bracket.
    pub center: f64,
}

impl ErrorBracket {
    pub fn contains(&self, v: f64) -> bool {
        self.lower <= v && v <= self.upper
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.upper - self.lower)
    }
}

/// `<X^p>_{s=2} (1 ∓ 1/(n_f + 1))`, which brackets `<X^p>` of the flat-prior
/// full-search posterior.
pub fn flat_prior_error_bounds(counts: &SearchCounts, p: u32) -> Result<ErrorBracket, Moment> {
    let center = match raw_moment(counts, Scenario::FullSearchAlmostConstantPrior, p) {
        Moment::Defined { value } => value,
        undefined => return Err(undefined),
    };
    let rel = 1.0 / (counts.n_f() as f64 + 1.0);
    Ok(ErrorBracket {
        lower: center * (1.0 - rel),
        upper: center * (1.0 + rel),
        center,
    })
}

/// Summary of the posterior of `X` under one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub counts: SearchCounts,
    pub scenario: Scenario,
    pub shift: u32,
    pub mean: Moment,
    pub variance: Moment,
    pub sd: Moment,
    pub skewness: Moment,
    pub kurtosis: Moment,
    /// Maximum difference between `mean` and the flat-prior full-search mean.
    /// Present only for the shift-2 scenario.
    pub mean_error_bound: Option<f64>,
    /// Same for the variance.
    pub variance_error_bound: Option<f64>,
    /// Skewness and kurtosis obtained through the shift substitution rather
    /// than the fixed-sample formulas directly.
    pub shape_shift_derived: bool,
}

impl MomentReport {
    pub fn new(counts: SearchCounts, scenario: Scenario) -> MomentReport {
        let scenario = scenario.normalized();
        let mean = mean_exact(&counts, scenario);
        let variance = variance_exact(&counts, scenario);
        let (mean_error_bound, variance_error_bound) =
            if scenario == Scenario::FullSearchAlmostConstantPrior {
                flat_prior_deviation_bounds(&counts)
            } else {
                (None, None)
            };
        MomentReport {
            counts,
            scenario,
            shift: scenario.shift(),
            mean,
            variance,
            sd: variance.map(f64::sqrt),
            skewness: skewness_exact(&counts, scenario),
            kurtosis: kurtosis_exact(&counts, scenario),
            mean_error_bound,
            variance_error_bound,
            shape_shift_derived: scenario.shift() != 0,
        }
    }

    /// Expected population total `n_f + <X>`.
    pub fn total_mean(&self) -> Moment {
        let n_f = self.counts.n_f() as f64;
        self.mean.map(|m| n_f + m)
    }
}

fn flat_prior_deviation_bounds(counts: &SearchCounts) -> (Option<f64>, Option<f64>) {
    let Ok(first) = flat_prior_error_bounds(counts, 1) else {
        return (None, None);
    };
    let mean_bound = first.half_width();
    let variance_bound = flat_prior_error_bounds(counts, 2).ok().map(|second| {
        // σ² = <X²> - <X>²; each raw moment may move by a relative δ.
        let delta = 1.0 / (counts.n_f() as f64 + 1.0);
        delta * second.center + (2.0 * delta + delta * delta) * first.center * first.center
    });
    (Some(mean_bound), variance_bound)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(a: u64, b: u64, ab: u64) -> SearchCounts {
        SearchCounts::new(a, b, ab).unwrap()
    }

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs().max(1e-300)
    }

    #[test]
    fn mean_examples() {
        let full = Scenario::FullSearchAlmostConstantPrior;
        let v = mean_exact(&c(177, 265, 171), full).value().unwrap();
        assert!(close(v, 7.0 * 95.0 / 171.0, 1e-15));
        assert_eq!(format!("{v:.1}"), "3.9");
        let v = mean_exact(&c(150, 123, 115), full).value().unwrap();
        assert_eq!(format!("{v:.1}"), "2.8");
        assert!(close(mean_exact(&c(10, 10, 10), full).value().unwrap(), 0.1, 1e-15));
        assert!(close(mean_exact(&c(5, 4, 3), Scenario::FixedSample).value().unwrap(), 6.0, 1e-15));
    }

    #[test]
    fn variance_examples() {
        let full = Scenario::FullSearchAlmostConstantPrior;
        let var = variance_exact(&c(177, 265, 171), full).value().unwrap();
        assert!((var - 6.334).abs() < 5e-4, "{var}");
        assert_eq!(format!("{:.1}", var.sqrt()), "2.5");
        assert_eq!(
            variance_exact(&c(21, 19, 1), full),
            Moment::Undefined { min_n_ab: 2 }
        );
        let sd = sd_exact(&c(323, 101, 3), full).value().unwrap();
        assert_eq!(sd.round(), 7638.0);
    }

    #[test]
    fn variance_closed_form_matches_raw_moments() {
        for (a, b, ab) in [(20, 15, 10), (177, 265, 171), (50, 7, 5), (9, 9, 4)] {
            let counts = c(a, b, ab);
            for s in [0, 1, 2, 4] {
                let sc = Scenario::from_shift(s);
                let (Some(m1), Some(m2)) = (
                    raw_moment(&counts, sc, 1).value(),
                    raw_moment(&counts, sc, 2).value(),
                ) else {
                    continue;
                };
                let v = variance_exact(&counts, sc).value().unwrap();
                assert!(close(v, m2 - m1 * m1, 1e-10), "{counts} s={s}");
            }
        }
    }

    #[test]
    fn raw_moment_examples() {
        let fixed = Scenario::FixedSample;
        assert!(close(raw_moment(&c(5, 4, 3), fixed, 1).value().unwrap(), 6.0, 1e-15));
        assert!(close(raw_moment(&c(20, 15, 10), fixed, 2).value().unwrap(), 107.25, 1e-14));
        assert_eq!(
            raw_moment(&c(5, 4, 3), fixed, 4),
            Moment::Undefined { min_n_ab: 6 }
        );
        // p = 3 and 4 written out with the explicit coefficients.
        let counts = c(30, 25, 20);
        let t: Vec<f64> = (1..=4)
            .map(|k| factorial_moment(&counts, fixed, k).value().unwrap())
            .collect();
        assert!(close(
            raw_moment(&counts, fixed, 3).value().unwrap(),
            t[2] + 3.0 * t[1] + t[0],
            1e-14
        ));
        assert!(close(
            raw_moment(&counts, fixed, 4).value().unwrap(),
            t[3] + 6.0 * t[2] + 7.0 * t[1] + t[0],
            1e-14
        ));
    }

    #[test]
    fn stirling_numbers() {
        assert_eq!(stirling2(4, 2), 7.0);
        assert_eq!(stirling2(4, 3), 6.0);
        assert_eq!(stirling2(3, 2), 3.0);
        assert_eq!(stirling2(5, 3), 25.0);
        assert_eq!(stirling2(3, 0), 0.0);
    }

    #[test]
    fn degenerate_overlap_skewness() {
        // x_a = x_b = 0: <X> = 1/8, <X^2> = 1/8 + 4/(8*7), <X^3> = 36/(8*7*6) + 3*4/56 + 1/8
        let counts = c(10, 10, 10);
        let m1: f64 = 1.0 / 8.0;
        let m2: f64 = 1.0 / 8.0 + 4.0 / 56.0;
        let m3 = 36.0 / 336.0 + 3.0 * 4.0 / 56.0 + 1.0 / 8.0;
        let expected = (m3 - 3.0 * m2 * m1 + 2.0 * m1.powi(3)) / m2.powf(1.5);
        let g = skewness_exact(&counts, Scenario::FixedSample).value().unwrap();
        assert!(close(g, expected, 1e-13));
        assert!(kurtosis_exact(&counts, Scenario::FixedSample).value().unwrap().is_finite());
    }

    #[test]
    fn shape_thresholds() {
        assert_eq!(
            kurtosis_exact(&c(30, 25, 4), Scenario::FixedSample),
            Moment::Undefined { min_n_ab: 6 }
        );
        assert_eq!(
            skewness_exact(&c(30, 25, 4), Scenario::FixedSample),
            Moment::Undefined { min_n_ab: 5 }
        );
        assert!(skewness_exact(&c(30, 25, 4), Scenario::PartialPlusComprehensive).is_defined());
    }

    #[test]
    fn skewness_shift_identity() {
        let a = skewness_exact(&c(20, 15, 10), Scenario::FullSearchAlmostConstantPrior);
        let b = skewness_exact(&c(22, 17, 12), Scenario::FixedSample);
        assert_eq!(a, b);
    }

    #[test]
    fn zero_overlap() {
        let counts = c(12, 9, 0);
        for sc in [Scenario::FixedSample, Scenario::PartialPlusComprehensive, Scenario::FullSearchAlmostConstantPrior] {
            let r = MomentReport::new(counts, sc);
            assert!(!r.mean.is_defined());
            assert!(!r.variance.is_defined());
        }
        // The s = 4 prior makes the mean and variance exist for any overlap.
        let r = MomentReport::new(counts, Scenario::FullSearchNormalisablePrior);
        assert!(r.mean.is_defined());
        assert!(r.variance.is_defined());
        assert!(!r.skewness.is_defined());
    }

    #[test]
    fn error_bounds() {
        let b = flat_prior_error_bounds(&c(177, 265, 171), 1).unwrap();
        assert!((b.lower - 3.874).abs() < 1e-3 && (b.upper - 3.903).abs() < 1e-3, "{b:?}");
        let mean = mean_exact(&c(177, 265, 171), Scenario::FullSearchAlmostConstantPrior).value().unwrap();
        assert!(close(b.half_width(), mean / 272.0, 1e-12));
        let b = flat_prior_error_bounds(&c(10, 10, 10), 1).unwrap();
        assert!(close(b.lower, 0.1 * (1.0 - 1.0 / 11.0), 1e-14));
        assert!(close(b.upper, 0.1 * (1.0 + 1.0 / 11.0), 1e-14));
        assert!(flat_prior_error_bounds(&c(21, 19, 1), 2).is_err());
    }

    #[test]
    fn report_invariants() {
        let r = MomentReport::new(c(177, 265, 171), Scenario::FullSearchAlmostConstantPrior);
        assert!(close(r.sd.value().unwrap(), r.variance.value().unwrap().sqrt(), 1e-15));
        assert!(r.mean_error_bound.is_some() && r.variance_error_bound.is_some());
        assert!(r.shape_shift_derived);
        let r = MomentReport::new(c(177, 265, 171), Scenario::FixedSample);
        assert!(r.mean_error_bound.is_none());
        assert!(!r.shape_shift_derived);
        let total = r.total_mean().value().unwrap();
        assert!(close(total, 271.0 + r.mean.value().unwrap(), 1e-15));
    }

    #[test]
    fn large_counts_do_not_overflow() {
        let counts = c(100_000, 90_000, 50_000);
        let r = MomentReport::new(counts, Scenario::FixedSample);
        for m in [r.mean, r.variance, r.skewness, r.kurtosis] {
            assert!(m.value().unwrap().is_finite());
        }
    }
}
