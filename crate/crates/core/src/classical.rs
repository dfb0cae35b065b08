//! Lincoln-Petersen, Chapman and Seber estimators, and the Poisson-regime
//! diagnostics used to judge when they agree with the exact moments.

use serde::{Deserialize, Serialize};

use crate::counts::SearchCounts;
use crate::moments::Moment;

/// Ratios `x_a/n_ab` and `x_b/n_ab` at or below this value (and nonzero)
/// count as the Poisson regime.
pub const POISSON_RATIO_THRESHOLD: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub total: f64,
    pub missed: f64,
}

/// `N ≈ n_a n_b / n_ab`, `X ≈ x_a x_b / n_ab`. `None` when nothing overlaps.
pub fn lincoln_petersen(counts: &SearchCounts) -> Option<Estimate> {
    if counts.n_ab() == 0 {
        return None;
    }
    let ab = counts.n_ab() as f64;
    Some(Estimate {
        total: (counts.n_a() as f64 * counts.n_b() as f64) / ab,
        missed: (counts.x_a() as f64 * counts.x_b() as f64) / ab,
    })
}

/// `X ≈ x_a x_b / (n_ab + 1)`, total `n_f + X`.
pub fn chapman(counts: &SearchCounts) -> Estimate {
    let missed = (counts.x_a() as f64 * counts.x_b() as f64) / (counts.n_ab() as f64 + 1.0);
    Estimate {
        total: counts.n_f() as f64 + missed,
        missed,
    }
}

/// `(n_a+1)(n_b+1) x_a x_b / ((n_ab+1)^2 (n_ab+2))`.
pub fn seber_variance(counts: &SearchCounts) -> f64 {
    let ab1 = counts.n_ab() as f64 + 1.0;
    // products of pairs keep the result exactly symmetric in a <-> b
    let found = (counts.n_a() as f64 + 1.0) * (counts.n_b() as f64 + 1.0);
    let exclusive = counts.x_a() as f64 * counts.x_b() as f64;
    found / ab1 * exclusive / (ab1 * (ab1 + 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoissonDiagnostics {
    /// `x_a x_b / n_f`, the rate of the Poisson factor of the posterior.
    pub mode_x_star: f64,
    /// `x_a / n_ab`; infinite when `n_ab = 0`.
    pub validity_ratio_a: f64,
    /// `x_b / n_ab`; infinite when `n_ab = 0`.
    pub validity_ratio_b: f64,
    /// `ln[(1 + X*/x_a)(1 + X*/x_b) / (1 + X*/n_f)]`, the change of the
    /// non-Poisson exponent between `X*-1` and `X*`.
    pub exponent_rate: f64,
    /// Both ratios nonzero and no larger than [`POISSON_RATIO_THRESHOLD`].
    pub reliable: bool,
}

/// Returns `None` when nothing was found (`n_f = 0`).
pub fn poisson_diagnostics(counts: &SearchCounts) -> Option<PoissonDiagnostics> {
    if counts.n_f() == 0 {
        return None;
    }
    let (xa, xb, nf) = (counts.x_a() as f64, counts.x_b() as f64, counts.n_f() as f64);
    let x_star = xa * xb / nf;
    let ratio = |x: f64| {
        if counts.n_ab() == 0 {
            f64::INFINITY
        } else {
            x / counts.n_ab() as f64
        }
    };
    // A zero exclusive count forces X* = 0, and that factor is taken as 1.
    let factor = |x: f64| if x == 0.0 { 1.0 } else { 1.0 + x_star / x };
    let exponent_rate = (factor(xa) * factor(xb) / (1.0 + x_star / nf)).ln();
    let (ra, rb) = (ratio(xa), ratio(xb));
    let in_regime = |r: f64| r > 0.0 && r <= POISSON_RATIO_THRESHOLD;
    Some(PoissonDiagnostics {
        mode_x_star: x_star,
        validity_ratio_a: ra,
        validity_ratio_b: rb,
        exponent_rate,
        reliable: in_regime(ra) && in_regime(rb),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicalReport {
    pub lp_total: Moment,
    pub lp_missed: Moment,
    pub chapman_total: f64,
    pub chapman_missed: f64,
    pub seber_variance: f64,
    pub seber_sd: f64,
    pub poisson: Option<PoissonDiagnostics>,
    /// Outside the Poisson regime, where the classical estimators are
    /// expected to fall noticeably below the exact moments.
    pub large_discrepancy_expected: bool,
}

impl ClassicalReport {
    pub fn new(counts: &SearchCounts) -> ClassicalReport {
        let lp = lincoln_petersen(counts);
        let ch = chapman(counts);
        let seber = seber_variance(counts);
        let poisson = poisson_diagnostics(counts);
        let undefined = Moment::Undefined { min_n_ab: 1 };
        ClassicalReport {
            lp_total: lp.map_or(undefined, |e| Moment::Defined { value: e.total }),
            lp_missed: lp.map_or(undefined, |e| Moment::Defined { value: e.missed }),
            chapman_total: ch.total,
            chapman_missed: ch.missed,
            seber_variance: seber,
            seber_sd: seber.sqrt(),
            poisson,
            large_discrepancy_expected: !poisson.is_some_and(|p| p.reliable),
        }
    }
}
