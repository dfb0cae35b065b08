//! Numerical posterior of the missed-item count.
//!
//! The posterior weights are
//!
//! ```text
//! w(X) = (X + x_a)! (X + x_b)! / (X! (X + n_f + s)!)      (shifted family)
//! w(X) = the s = 1 weight times 1 / (X + n_f + 1)          (flat-prior full search)
//! ```
//!
//! Both are rational functions of `X` whose tail decays like `X^-m` with
//! `m = n_ab + s` (or `n_ab + 2` for the flat-prior family). Writing the
//! weight in product form shows that `X^m w(X)` increases monotonically
//! towards 1, which gives the rigorous tail bracket used for truncation:
//!
//! ```text
//! w(K) K^{p+1} / (m-p-1)  <=  Σ_{X>=K} X^p w(X)  <=  K^{p-m} + K^{p+1-m} / (m-p-1)
//! ```
//!
//! A table holds the log-weights for `X = 0..=x_max`. The part beyond
//! `x_max` is estimated with Euler-Maclaurin (integral plus endpoint
//! corrections), which keeps moments accurate even when the tail decays
//! only like `X^-2`. Nothing here uses the closed-form moments, so the
//! table is an independent check on them.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::counts::{Scenario, SearchCounts};
use crate::error::PosteriorError;
use crate::moments::Moment;
use crate::special::{gauss_legendre, ln_factorial, ln_gamma, NeumaierSum};

/// Default hard cap on the number of table entries.
pub const DEFAULT_MAX_TERMS: u64 = 100_000_000;

/// Tables always extend at least this far past zero so the Euler-Maclaurin
/// tail estimate starts well inside its asymptotic regime.
const MIN_TABLE_LEN: u64 = 256;

/// Which posterior weight to tabulate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum WeightFamily {
    /// Fixed-sample weight under the scenario's prior shift.
    Shifted { scenario: Scenario },
    /// Both searchers search everything, flat prior on `N`. Its moments have
    /// no closed form; the shift-2 moments bracket them.
    FlatPriorFullSearch,
}

impl From<Scenario> for WeightFamily {
    fn from(scenario: Scenario) -> Self {
        WeightFamily::Shifted { scenario }
    }
}

impl WeightFamily {
    /// Exponent of the power-law tail.
    pub fn decay(&self, counts: &SearchCounts) -> u64 {
        match self {
            WeightFamily::Shifted { scenario } => counts.n_ab() + u64::from(scenario.shift()),
            WeightFamily::FlatPriorFullSearch => counts.n_ab() + 2,
        }
    }

    fn offset(&self) -> u64 {
        match self {
            WeightFamily::Shifted { scenario } => u64::from(scenario.shift()),
            WeightFamily::FlatPriorFullSearch => 2,
        }
    }
}

/// The weight in product form:
/// `Π_{i<=a}(x+i) / [Π_{j=b+1..=upper}(x+j) · (x+extra)]`, with `a <= b`.
#[derive(Debug, Clone, Copy)]
struct Kernel {
    a: u64,
    b: u64,
    upper: u64,
    extra: Option<u64>,
    decay: u64,
}

impl Kernel {
    fn new(counts: &SearchCounts, family: WeightFamily) -> Kernel {
        let a = counts.x_a().min(counts.x_b());
        let b = counts.x_a().max(counts.x_b());
        let (upper, extra) = match family {
            WeightFamily::Shifted { scenario } => (counts.n_f() + u64::from(scenario.shift()), None),
            WeightFamily::FlatPriorFullSearch => (counts.n_f() + 1, Some(counts.n_f() + 1)),
        };
        Kernel {
            a,
            b,
            upper,
            extra,
            decay: family.decay(counts),
        }
    }

    /// `m` of the plain part (`upper - a - b`).
    fn plain_decay(&self) -> u64 {
        self.upper - self.a - self.b
    }

    /// `ln w(x+1) - ln w(x)`.
    fn ln_ratio(&self, x: f64) -> f64 {
        let (a, b, upper) = (self.a as f64, self.b as f64, self.upper as f64);
        let mut r = (a / (x + 1.0)).ln_1p() - ((upper - b) / (x + b + 1.0)).ln_1p();
        if let Some(e) = self.extra {
            r -= (1.0 / (x + e as f64)).ln_1p();
        }
        r
    }

    /// `ln w(x) - ln w(k)` for real `x, k > 0`.
    fn ln_w_rel(&self, x: f64, k: f64) -> f64 {
        let (a, b) = (self.a, self.b as f64);
        let mut acc = NeumaierSum::default();
        for i in 1..=a {
            let i = i as f64;
            acc.add((b / (k + i)).ln_1p() - (b / (x + i)).ln_1p());
        }
        let d = x - k;
        let base = (self.a + self.b) as f64;
        for j in 1..=self.plain_decay() {
            acc.add(-(d / (k + base + j as f64)).ln_1p());
        }
        if let Some(e) = self.extra {
            acc.add(-(d / (k + e as f64)).ln_1p());
        }
        acc.value()
    }

    /// `d/dx ln w(x)`.
    fn d_ln_w(&self, x: f64) -> f64 {
        let b = self.b as f64;
        let mut acc = NeumaierSum::default();
        for i in 1..=self.a {
            let i = i as f64;
            acc.add(b / ((x + i) * (x + b + i)));
        }
        let base = (self.a + self.b) as f64;
        for j in 1..=self.plain_decay() {
            acc.add(-1.0 / (x + base + j as f64));
        }
        if let Some(e) = self.extra {
            acc.add(-1.0 / (x + e as f64));
        }
        acc.value()
    }
}

/// `ln w(x)` via log-gamma:
/// `lnΓ(x+x_a+1) + lnΓ(x+x_b+1) - lnΓ(x+1) - lnΓ(x+n_f+s+1)`, minus
/// `ln(x+n_f+1)` for the flat-prior family.
pub fn log_weight(counts: &SearchCounts, family: WeightFamily, x: u64) -> f64 {
    let top = counts.n_f() + family.offset();
    match family {
        WeightFamily::Shifted { .. } => {
            ln_factorial(x + counts.x_a()) + ln_factorial(x + counts.x_b())
                - ln_factorial(x)
                - ln_factorial(x + top)
        }
        WeightFamily::FlatPriorFullSearch => {
            let top = counts.n_f() + 1;
            ln_factorial(x + counts.x_a()) + ln_factorial(x + counts.x_b())
                - ln_factorial(x)
                - ln_factorial(x + top)
                - ((x + top) as f64).ln()
        }
    }
}

/// Log of the normalising sum `Σ_X w(X)` from Gauss's summation theorem:
/// `lnΓ(x_a+1) + lnΓ(x_b+1) + lnΓ(m-1) - lnΓ(m+x_b) - lnΓ(m+x_a)` with
/// `m = n_ab + s`. Undefined when `m <= 1` (the series diverges).
pub fn normalization_exact(counts: &SearchCounts, scenario: Scenario) -> Moment {
    let m = counts.n_ab() + u64::from(scenario.shift());
    if m <= 1 {
        return Moment::Undefined {
            min_n_ab: 2u64.saturating_sub(u64::from(scenario.shift())),
        };
    }
    let (xa, xb) = (counts.x_a(), counts.x_b());
    let value = ln_factorial(xa) + ln_factorial(xb) + ln_gamma((m - 1) as f64)
        - ln_factorial(m + xb - 1)
        - ln_factorial(m + xa - 1);
    Moment::Defined { value }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TableOptions {
    pub tail_tol: f64,
    pub max_terms: u64,
}

impl Default for TableOptions {
    fn default() -> Self {
        TableOptions {
            tail_tol: 1e-10,
            max_terms: DEFAULT_MAX_TERMS,
        }
    }
}

/// Tabulated posterior over `X = 0..=x_max`.
#[derive(Debug, Clone)]
pub struct PosteriorTable {
    counts: SearchCounts,
    family: WeightFamily,
    kernel: Kernel,
    log_weights: Vec<f64>,
    /// `ln w(x_max + 1)`, where the tail starts.
    log_weight_next: f64,
    /// Reference for scaled sums (the log-weight at the mode).
    log_ref: f64,
    /// `Σ exp(lw - log_ref)` over the table.
    head_scaled: f64,
    /// Euler-Maclaurin estimate of the tail mass, same scale.
    tail_scaled: f64,
    log_norm: f64,
    tail_mass_bound: f64,
    mode: u64,
}

/// A moment computed from a table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableMoment {
    pub value: f64,
    /// Share of `value` contributed by the estimated tail beyond `x_max`.
    pub tail_estimate: f64,
    /// Rigorous additive bound on `|value - true moment|` from the tail
    /// bracket, ignoring floating-point rounding. Infinite when divergent.
    pub error_bound: f64,
    /// False when the tail of `X^p w(X)` is not summable; `value` then only
    /// covers the table and grows without limit as the table is extended.
    pub convergent: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CredibleInterval {
    pub lower: u64,
    pub upper: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalWithMass {
    pub lower: u64,
    pub upper: u64,
    /// Requested mass.
    pub mass: f64,
    /// Probability actually enclosed.
    pub enclosed: f64,
}

pub fn build_table(
    counts: &SearchCounts,
    family: impl Into<WeightFamily>,
    tail_tol: f64,
) -> Result<PosteriorTable, PosteriorError> {
    build_table_with(
        counts,
        family,
        &TableOptions {
            tail_tol,
            ..TableOptions::default()
        },
    )
}

pub fn build_table_with(
    counts: &SearchCounts,
    family: impl Into<WeightFamily>,
    options: &TableOptions,
) -> Result<PosteriorTable, PosteriorError> {
    let family = family.into();
    let tol = options.tail_tol;
    if !(tol > 0.0 && tol < 1.0) {
        return Err(PosteriorError::InvalidTolerance(tol));
    }
    let kernel = Kernel::new(counts, family);
    let m = kernel.decay;
    if m < 2 {
        return Err(PosteriorError::Divergent {
            decay: m,
            min_n_ab: 2u64.saturating_sub(family.offset()),
        });
    }
    let mf = m as f64;
    let ln_tol = tol.ln();
    // ln of Σ_{x>=k} x^-m bound
    let ln_tail_upper = |k: f64| -mf * k.ln() + (k / (mf - 1.0)).ln_1p();

    let mut log_weights: Vec<f64> = Vec::new();
    let mut lw = log_weight(counts, family, 0);
    let mut max_lw = f64::NEG_INFINITY;
    let mut mode = 0u64;
    let mut head = NeumaierSum::default();
    let mut past_mode = false;
    let mut next_budget_check = 0u64;
    let mut x = 0u64;
    loop {
        log_weights.push(lw);
        if lw > max_lw {
            // rescale the running sum to the new reference
            let scaled = head.value() * (max_lw - lw).exp();
            head = NeumaierSum::default();
            head.add(scaled);
            head.add(1.0);
            max_lw = lw;
            mode = x;
        } else {
            head.add((lw - max_lw).exp());
        }
        let ratio = kernel.ln_ratio(x as f64);
        past_mode = past_mode || ratio <= 0.0;
        let k = x + 1;
        if past_mode && k >= MIN_TABLE_LEN {
            let ln_head_abs = max_lw + head.value().ln();
            let ln_upper = ln_tail_upper(k as f64);
            if ln_upper - ln_head_abs <= ln_tol {
                lw += ratio;
                break;
            }
            if k >= next_budget_check {
                // total <= head + upper(k), so this K is a lower bound on what is needed
                let ln_total_max = crate::special::log_add_exp(ln_head_abs, ln_upper);
                let ln_k_needed = -((mf - 1.0).ln() + ln_tol + ln_total_max) / (mf - 1.0);
                if ln_k_needed > (options.max_terms as f64).ln() {
                    return Err(PosteriorError::BudgetExceeded {
                        required: ln_k_needed.exp(),
                        cap: options.max_terms,
                    });
                }
                next_budget_check = k.saturating_mul(2);
            }
        }
        if k >= options.max_terms {
            return Err(PosteriorError::BudgetExceeded {
                required: f64::INFINITY,
                cap: options.max_terms,
            });
        }
        lw += ratio;
        x = k;
    }

    let mut table = PosteriorTable {
        counts: *counts,
        family,
        kernel,
        log_weights,
        log_weight_next: lw,
        log_ref: max_lw,
        head_scaled: head.value(),
        tail_scaled: 0.0,
        log_norm: 0.0,
        tail_mass_bound: 0.0,
        mode,
    };
    let tail = table.tail(0);
    table.tail_scaled = tail.estimate;
    table.log_norm = table.log_ref + (table.head_scaled + tail.estimate).ln();
    table.tail_mass_bound = tail.upper / table.head_scaled;
    Ok(table)
}

/// Scaled tail sums `Σ_{x > x_max} x^p w(x) / exp(log_ref)`.
#[derive(Debug, Clone, Copy)]
struct TailSum {
    estimate: f64,
    lower: f64,
    upper: f64,
}

impl PosteriorTable {
    pub fn counts(&self) -> &SearchCounts {
        &self.counts
    }

    pub fn family(&self) -> WeightFamily {
        self.family
    }

    /// Unnormalised log-weights for `X = 0..=x_max`.
    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    pub fn x_max(&self) -> u64 {
        self.log_weights.len() as u64 - 1
    }

    /// Log of the normalising constant, including the estimated tail.
    pub fn log_norm(&self) -> f64 {
        self.log_norm
    }

    /// `ln Σ_{X<=x_max} w(X)`.
    pub fn log_head_sum(&self) -> f64 {
        self.log_ref + self.head_scaled.ln()
    }

    /// Rigorous upper bound on the posterior mass beyond `x_max`.
    pub fn tail_mass_bound(&self) -> f64 {
        self.tail_mass_bound
    }

    /// Estimated posterior mass beyond `x_max`.
    pub fn tail_mass_estimate(&self) -> f64 {
        self.tail_scaled / (self.head_scaled + self.tail_scaled)
    }

    /// Exponent of the power-law tail of the weights.
    pub fn decay(&self) -> u64 {
        self.kernel.decay
    }

    pub fn pmf(&self, x: u64) -> f64 {
        self.log_weights
            .get(x as usize)
            .map_or(0.0, |lw| (lw - self.log_norm).exp())
    }

    pub fn pmf_values(&self) -> Vec<f64> {
        self.log_weights
            .iter()
            .map(|lw| (lw - self.log_norm).exp())
            .collect()
    }

    /// Cumulative probabilities over the table.
    pub fn cdf_values(&self) -> Vec<f64> {
        let mut acc = NeumaierSum::default();
        self.log_weights
            .iter()
            .map(|lw| {
                acc.add((lw - self.log_norm).exp());
                acc.value()
            })
            .collect()
    }

    /// Most probable `X`, ties resolved towards the smaller value.
    pub fn mode(&self) -> u64 {
        self.mode
    }

    fn tail(&self, p: u32) -> TailSum {
        let m = self.kernel.decay;
        if m <= u64::from(p) + 1 {
            return TailSum {
                estimate: f64::INFINITY,
                lower: f64::INFINITY,
                upper: f64::INFINITY,
            };
        }
        let k = (self.x_max() + 1) as f64;
        let pf = f64::from(p);
        let r = (m - u64::from(p) - 1) as f64;
        let ln_k = k.ln();
        let ln_wk = self.log_weight_next - self.log_ref;
        let upper = ((pf - m as f64) * ln_k).exp() * (1.0 + k / r) * (-self.log_ref).exp();
        let upper = if upper.is_finite() {
            upper
        } else {
            (((pf - m as f64) * ln_k) + (k / r).ln_1p() - self.log_ref).exp()
        };
        let lower = (ln_wk + (pf + 1.0) * ln_k).exp() / r;
        let estimate = euler_maclaurin_tail(&self.kernel, k, p, ln_wk + pf * ln_k);
        let estimate = if estimate.is_finite() {
            estimate.clamp(lower, upper.max(lower))
        } else {
            0.5 * (lower + upper)
        };
        TailSum {
            estimate,
            lower,
            upper,
        }
    }

    /// `<X^p>` from the table plus the estimated tail.
    pub fn moment(&self, p: u32) -> TableMoment {
        let head_p: NeumaierSum = self
            .log_weights
            .iter()
            .enumerate()
            .map(|(x, lw)| (x as f64).powi(p as i32) * (lw - self.log_ref).exp())
            .collect();
        let head_p = head_p.value();
        let z = self.head_scaled + self.tail_scaled;
        let tail0 = self.tail(0);
        let e0 = (tail0.upper - tail0.estimate).max(tail0.estimate - tail0.lower);
        if p == 0 {
            return TableMoment {
                value: 1.0,
                tail_estimate: self.tail_scaled / z,
                error_bound: 0.0,
                convergent: true,
            };
        }
        let tail = self.tail(p);
        if !tail.estimate.is_finite() {
            return TableMoment {
                value: head_p / z,
                tail_estimate: 0.0,
                error_bound: f64::INFINITY,
                convergent: false,
            };
        }
        let value = (head_p + tail.estimate) / z;
        let ep = (tail.upper - tail.estimate).max(tail.estimate - tail.lower);
        TableMoment {
            value,
            tail_estimate: tail.estimate / z,
            error_bound: (ep + value * e0) / (z - e0).max(f64::MIN_POSITIVE),
            convergent: true,
        }
    }

    /// Shortest contiguous interval holding at least `mass` probability.
    /// Among equally short intervals the one enclosing more mass wins, then
    /// the one with the smaller lower end.
    pub fn credible_interval(&self, mass: f64) -> Result<IntervalWithMass, PosteriorError> {
        if !(mass > 0.0 && mass < 1.0 - self.tail_mass_bound) {
            return Err(PosteriorError::InvalidMass(mass));
        }
        let pmf = self.pmf_values();
        let mut cum = Vec::with_capacity(pmf.len() + 1);
        let mut acc = NeumaierSum::default();
        cum.push(0.0);
        for p in &pmf {
            acc.add(*p);
            cum.push(acc.value());
        }
        let covered = *cum.last().unwrap();
        if covered < mass {
            return Err(PosteriorError::MassNotAchievable { mass, covered });
        }
        let n = pmf.len();
        let mut best: Option<(usize, usize, f64)> = None;
        let mut hi = 0usize;
        for lo in 0..n {
            if hi < lo {
                hi = lo;
            }
            while hi < n && cum[hi + 1] - cum[lo] < mass {
                hi += 1;
            }
            if hi == n {
                break;
            }
            let enclosed = cum[hi + 1] - cum[lo];
            let better = match best {
                None => true,
                Some((blo, bhi, bmass)) => {
                    let (len, blen) = (hi - lo, bhi - blo);
                    // masses equal up to rounding count as tied
                    len < blen || (len == blen && enclosed > bmass * (1.0 + 1e-12))
                }
            };
            if better {
                best = Some((lo, hi, enclosed));
            }
        }
        let (lo, hi, enclosed) = best.ok_or(PosteriorError::MassNotAchievable { mass, covered })?;
        Ok(IntervalWithMass {
            lower: lo as u64,
            upper: hi as u64,
            mass,
            enclosed,
        })
    }

    /// Writes `x,pmf,cdf` rows with a header line.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "x,pmf,cdf")?;
        let mut acc = NeumaierSum::default();
        for (x, lw) in self.log_weights.iter().enumerate() {
            let p = (lw - self.log_norm).exp();
            acc.add(p);
            writeln!(out, "{x},{p},{}", acc.value())?;
        }
        Ok(())
    }

    /// Metadata plus the `x`, `pmf` and `cdf` arrays, ready for serialisation.
    pub fn export(&self) -> TableExport {
        let pmf = self.pmf_values();
        let cdf = self.cdf_values();
        TableExport {
            counts: self.counts,
            family: self.family,
            x_max: self.x_max(),
            decay: self.decay(),
            log_norm: self.log_norm,
            tail_mass_bound: self.tail_mass_bound,
            tail_mass_estimate: self.tail_mass_estimate(),
            mode: self.mode,
            x: (0..=self.x_max()).collect(),
            pmf,
            cdf,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TableExport {
    pub counts: SearchCounts,
    pub family: WeightFamily,
    pub x_max: u64,
    pub decay: u64,
    pub log_norm: f64,
    pub tail_mass_bound: f64,
    pub tail_mass_estimate: f64,
    pub mode: u64,
    pub x: Vec<u64>,
    pub pmf: Vec<f64>,
    pub cdf: Vec<f64>,
}

const GL_PANEL_NODES: usize = 20;

/// `Σ_{x>=k} f(x)` for `f(x) = x^p w(x)` given `ln f(k)` on the table's
/// scale, via `∫_k^∞ f + f(k)/2 - f'(k)/12 + f'''(k)/720`.
fn euler_maclaurin_tail(kernel: &Kernel, k: f64, p: u32, ln_fk: f64) -> f64 {
    let fk = ln_fk.exp();
    if fk == 0.0 {
        return 0.0;
    }
    let pf = f64::from(p);
    let ln_f_rel = |x: f64| pf * (x / k).ln() + kernel.ln_w_rel(x, k);
    let dlnf = |x: f64| pf / x + kernel.d_ln_w(x);

    // ∫_k^∞ f(x) dx = f(k) ∫_0^1 exp(ln f(k/t) - ln f(k)) k / t^2 dt
    // The integrand is t^(m-p-2) times a factor analytic away from
    // t = -k/c, c <= upper; panels are graded towards t = 0 accordingly.
    let degree = kernel.decay.saturating_sub(u64::from(p) + 2) as usize;
    let nodes = GL_PANEL_NODES.max((degree + 1) / 2 + 8).min(400);
    let (gx, gw) = gauss_legendre(nodes);
    let gap = k / (kernel.upper as f64 + 1.0);
    let mut edges = vec![0.0];
    let mut t = gap.min(1.0);
    while t < 1.0 {
        edges.push(t);
        t *= 2.0;
    }
    edges.push(1.0);
    let mut integral = NeumaierSum::default();
    for pair in edges.windows(2) {
        let (lo, hi) = (pair[0], pair[1]);
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        for (xi, wi) in gx.iter().zip(&gw) {
            let t = mid + half * xi;
            let x = k / t;
            let v = (ln_f_rel(x)).exp() * k / (t * t);
            integral.add(wi * half * v);
        }
    }
    let integral = integral.value();

    let f1 = dlnf(k);
    let h = (k / 16.0).max(1.0);
    let fprime = |x: f64| ln_f_rel(x).exp() * dlnf(x);
    let f3 = (fprime(k + h) - 2.0 * f1 + fprime(k - h)) / (h * h);
    fk * (integral + 0.5 - f1 / 12.0 + f3 / 720.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::log_sum_exp;

    fn c(a: u64, b: u64, ab: u64) -> SearchCounts {
        SearchCounts::new(a, b, ab).unwrap()
    }

    const FIXED: Scenario = Scenario::FixedSample;

    #[test]
    fn log_weight_at_zero() {
        let counts = c(20, 15, 10);
        let expected = ln_factorial(10) + ln_factorial(5) - ln_factorial(25);
        assert!((log_weight(&counts, FIXED.into(), 0) - expected).abs() < 1e-12);
    }

    #[test]
    fn log_weight_ratio() {
        let counts = c(5, 4, 3);
        let d = log_weight(&counts, FIXED.into(), 1) - log_weight(&counts, FIXED.into(), 0);
        assert!((d.exp() - 3.0 * 2.0 / 7.0).abs() < 1e-14);
    }

    #[test]
    fn kernel_ratio_matches_log_gamma_form() {
        for counts in [c(5, 4, 3), c(30, 25, 20), c(344, 120, 4)] {
            for family in [
                WeightFamily::from(FIXED),
                Scenario::FullSearchNormalisablePrior.into(),
                WeightFamily::FlatPriorFullSearch,
            ] {
                let kernel = Kernel::new(&counts, family);
                for x in [0u64, 1, 7, 100, 5000] {
                    let direct = log_weight(&counts, family, x + 1) - log_weight(&counts, family, x);
                    assert!((kernel.ln_ratio(x as f64) - direct).abs() < 1e-10, "{counts} {family:?} {x}");
                    let rel = kernel.ln_w_rel(x as f64 + 3.0, x as f64 + 1.0);
                    let direct = log_weight(&counts, family, x + 3) - log_weight(&counts, family, x + 1);
                    assert!((rel - direct).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn power_law_majorant_holds() {
        // x^m w(x) <= 1 and increasing
        let counts = c(30, 25, 6);
        for family in [WeightFamily::from(FIXED), WeightFamily::FlatPriorFullSearch] {
            let m = family.decay(&counts) as f64;
            let mut prev = 0.0;
            for x in 1..3000u64 {
                let g = (log_weight(&counts, family, x) + m * (x as f64).ln()).exp();
                assert!(g <= 1.0 + 1e-12 && g >= prev * (1.0 - 1e-12));
                prev = g;
            }
        }
    }

    #[test]
    fn normalization_examples() {
        let v = normalization_exact(&c(10, 10, 10), FIXED).value().unwrap();
        let expected = ln_factorial(8) - 2.0 * ln_factorial(9);
        assert!((v - expected).abs() < 1e-13);
        assert_eq!(normalization_exact(&c(21, 19, 1), FIXED), Moment::Undefined { min_n_ab: 2 });
        assert!(normalization_exact(&c(21, 19, 1), Scenario::PartialPlusComprehensive).is_defined());

        let counts = c(5, 4, 3);
        let t = build_table(&counts, FIXED, 1e-10).unwrap();
        let exact = normalization_exact(&counts, FIXED).value().unwrap();
        let head = log_sum_exp(t.log_weights());
        assert!((head - t.log_head_sum()).abs() < 1e-12);
        assert!(exact >= head - 1e-12);
        assert!(exact - head <= t.tail_mass_bound() + 1e-12);
    }

    #[test]
    fn table_mean_matches_closed_form() {
        let counts = c(5, 4, 3);
        let t = build_table(&counts, FIXED, 1e-10).unwrap();
        let m = t.moment(1);
        assert!(m.convergent);
        assert!((m.value - 6.0).abs() < 6e-6, "{m:?}");
        assert!(t.tail_mass_bound() <= 1e-10);
        assert!((t.moment(0).value - 1.0).abs() < 1e-15);
    }

    #[test]
    fn divergent_moment_is_flagged() {
        let counts = c(5, 4, 3);
        let t = build_table(&counts, FIXED, 1e-8).unwrap();
        let m = t.moment(2);
        assert!(!m.convergent);
        assert!(m.value.is_finite() && m.error_bound.is_infinite());
    }

    #[test]
    fn complete_overlap_table() {
        let t = build_table(&c(10, 10, 10), FIXED, 1e-10).unwrap();
        assert_eq!(t.mode(), 0);
        let pmf = t.pmf_values();
        assert!(pmf.windows(2).all(|w| w[0] >= w[1]));
        assert!((t.moment(1).value - 0.125).abs() < 1e-9);
    }

    #[test]
    fn divergence_and_budget_errors() {
        assert!(matches!(
            build_table(&c(21, 19, 1), FIXED, 1e-10),
            Err(PosteriorError::Divergent { min_n_ab: 2, .. })
        ));
        assert!(matches!(
            build_table(&c(21, 19, 0), Scenario::FullSearchAlmostConstantPrior, 1e-12),
            Err(PosteriorError::BudgetExceeded { .. })
        ));
        assert!(matches!(
            build_table(&c(5, 4, 3), FIXED, 0.0),
            Err(PosteriorError::InvalidTolerance(_))
        ));
        let opts = TableOptions { tail_tol: 1e-10, max_terms: 1000 };
        assert!(matches!(
            build_table_with(&c(50, 40, 3), FIXED, &opts),
            Err(PosteriorError::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn mode_matches_exact_crossing() {
        // w(x+1) <= w(x) exactly when x >= ((x_a+1)(x_b+1) - (n_f+s+1)) / (n_ab+s)
        for (a, b, ab) in [(5, 4, 3), (177, 265, 171), (20, 20, 5), (13, 40, 9)] {
            let counts = c(a, b, ab);
            for s in [0u32, 1, 2, 4] {
                let t = build_table(&counts, Scenario::from_shift(s), 1e-6).unwrap();
                let num = (counts.x_a() as i64 + 1) * (counts.x_b() as i64 + 1)
                    - (counts.n_f() as i64 + s as i64 + 1);
                let den = (ab + s as u64) as i64;
                let expected = if num <= 0 { 0 } else { (num + den - 1) / den } as u64;
                assert_eq!(t.mode(), expected, "{counts} s={s}");
            }
        }
    }

    #[test]
    fn credible_interval_examples() {
        let t = build_table(&c(177, 265, 171), Scenario::FullSearchAlmostConstantPrior, 1e-12).unwrap();
        let ci = t.credible_interval(0.68).unwrap();
        assert!(ci.enclosed >= 0.68);
        assert!(ci.lower <= 2 && (5..=7).contains(&ci.upper), "{ci:?}");
        let tiny = t.credible_interval(1e-9).unwrap();
        assert_eq!((tiny.lower, tiny.upper), (t.mode(), t.mode()));

        let t = build_table(&c(10, 10, 10), FIXED, 1e-10).unwrap();
        assert_eq!(t.credible_interval(0.9).unwrap().lower, 0);
        assert!(t.credible_interval(1.0).is_err());
        assert!(t.credible_interval(0.0).is_err());
    }

    #[test]
    fn csv_export_normalised() {
        let pmf_sum = |t: &PosteriorTable| {
            let mut buf = Vec::new();
            t.write_csv(&mut buf).unwrap();
            let text = String::from_utf8(buf).unwrap();
            let mut lines = text.lines();
            assert_eq!(lines.next(), Some("x,pmf,cdf"));
            lines
                .map(|l| l.split(',').nth(1).unwrap().parse::<f64>().unwrap())
                .sum::<f64>()
        };
        let t = build_table(&c(5, 4, 3), FIXED, 1e-10).unwrap();
        let total = pmf_sum(&t);
        // naive summation over ~10^5 rows
        assert!(total <= 1.0 + 1e-11 && total >= 1.0 - t.tail_mass_bound() - 1e-11, "{total}");
        let t = build_table(&c(5, 4, 3), FIXED, 1e-12).unwrap();
        assert!((pmf_sum(&t) - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn flat_prior_mean_inside_bracket() {
        let counts = c(150, 123, 115);
        let t = build_table(&counts, WeightFamily::FlatPriorFullSearch, 1e-10).unwrap();
        let bracket = crate::moments::flat_prior_error_bounds(&counts, 1).unwrap();
        assert!(bracket.contains(t.moment(1).value));
        let bracket2 = crate::moments::flat_prior_error_bounds(&counts, 2).unwrap();
        assert!(bracket2.contains(t.moment(2).value));
    }
}
