//! Monte Carlo harness: draws two-searcher data from the equal-detectability
//! model and scores each estimator against the known number of missed items.
//!
//! Replicate `i` draws from a ChaCha8 generator seeded with the configured
//! seed and switched to stream `i`, so results do not depend on how
//! replicates are scheduled across threads. Replicates are generated in
//! parallel, collected in order and aggregated sequentially, which makes the
//! output bit-identical for a given configuration.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::classical::{chapman, lincoln_petersen, seber_variance};
use crate::counts::{Scenario, SearchCounts};
use crate::error::SimError;
use crate::moments::{mean_exact, sd_exact};
use crate::posterior::build_table;
use crate::special::{ln_factorial, NeumaierSum};

pub const RNG_ALGORITHM: &str = "ChaCha8 (rand_chacha), seeded from the config seed, stream = replicate index";

/// Tail tolerance for posterior tables built for credible-interval coverage.
const CREDIBLE_TAIL_TOL: f64 = 1e-6;

/// Minimum expected count per chi-square bin after pooling.
const MIN_EXPECTED: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SearchMode {
    /// Every item is found by A with probability `p_a` and by B with `p_b`,
    /// independently.
    FullSearch { p_a: f64, p_b: f64 },
    /// A marks a uniformly random `n_a`-subset, B a uniformly random
    /// `n_b`-subset.
    FixedSample { n_a: u64, n_b: u64 },
}

impl SearchMode {
    fn name(&self) -> &'static str {
        match self {
            SearchMode::FullSearch { .. } => "full-search",
            SearchMode::FixedSample { .. } => "fixed-sample",
        }
    }

    /// Scenario whose posterior matches this data-generating procedure.
    pub fn matched_scenario(&self) -> Scenario {
        match self {
            SearchMode::FullSearch { .. } => Scenario::FullSearchAlmostConstantPrior,
            SearchMode::FixedSample { .. } => Scenario::FixedSample,
        }
    }

    fn matches(&self, scenario: Scenario) -> bool {
        match self {
            SearchMode::FullSearch { .. } => matches!(scenario.shift(), 2 | 4),
            SearchMode::FixedSample { .. } => scenario.shift() == 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EstimatorId {
    /// Posterior mean and standard deviation under a scenario.
    Bayes { scenario: Scenario },
    /// Chapman's estimate with the Seber standard deviation.
    Chapman,
    /// Lincoln-Petersen, interval from the Seber standard deviation.
    LincolnPetersen,
}

impl fmt::Display for EstimatorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EstimatorId::Bayes { scenario } => write!(f, "bayes:{scenario}"),
            EstimatorId::Chapman => f.write_str("chapman"),
            EstimatorId::LincolnPetersen => f.write_str("lp"),
        }
    }
}

impl FromStr for EstimatorId {
    type Err = String;

    /// Accepts `chapman`, `lp` and `bayes:<scenario>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim().to_ascii_lowercase();
        match t.as_str() {
            "chapman" => Ok(EstimatorId::Chapman),
            "lp" | "lincoln-petersen" => Ok(EstimatorId::LincolnPetersen),
            _ => match t.strip_prefix("bayes:") {
                Some(rest) => Ok(EstimatorId::Bayes {
                    scenario: rest.parse()?,
                }),
                None => Err(format!(
                    "unknown estimator '{s}' (expected chapman, lp or bayes:<scenario>)"
                )),
            },
        }
    }
}

fn default_width() -> f64 {
    2.0
}

fn default_gate() -> f64 {
    0.9
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub true_n: u64,
    pub mode: SearchMode,
    pub replicates: u64,
    pub seed: u64,
    pub estimators: Vec<EstimatorId>,
    /// Intervals are `estimate ± interval_width_sd · sd`.
    #[serde(default = "default_width")]
    pub interval_width_sd: f64,
    /// When set, Bayes estimators are also scored by the shortest credible
    /// interval of this mass.
    #[serde(default)]
    pub interval_mass: Option<f64>,
    /// Allow Bayes scenarios that do not match the search procedure.
    #[serde(default)]
    pub allow_mismatched: bool,
    /// Keep per-replicate counts and estimates.
    #[serde(default)]
    pub keep_log: bool,
    /// Coverage threshold reported alongside the results; not enforced here.
    #[serde(default = "default_gate")]
    pub coverage_soft_gate: f64,
}

impl SimConfig {
    /// Config with the matched Bayes estimator, Chapman and Lincoln-Petersen.
    pub fn new(true_n: u64, mode: SearchMode, replicates: u64, seed: u64) -> SimConfig {
        SimConfig {
            true_n,
            mode,
            replicates,
            seed,
            estimators: vec![
                EstimatorId::Bayes {
                    scenario: mode.matched_scenario(),
                },
                EstimatorId::Chapman,
                EstimatorId::LincolnPetersen,
            ],
            interval_width_sd: default_width(),
            interval_mass: None,
            allow_mismatched: false,
            keep_log: false,
            coverage_soft_gate: default_gate(),
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.true_n == 0 {
            return Err(SimError::EmptyPopulation);
        }
        match self.mode {
            SearchMode::FullSearch { p_a, p_b } => {
                for (name, value) in [("p_a", p_a), ("p_b", p_b)] {
                    if !(value > 0.0 && value <= 1.0) {
                        return Err(SimError::InvalidProbability { name, value });
                    }
                }
            }
            SearchMode::FixedSample { n_a, n_b } => {
                for (name, value) in [("n_a", n_a), ("n_b", n_b)] {
                    if value > self.true_n {
                        return Err(SimError::SampleTooLarge {
                            name,
                            value,
                            true_n: self.true_n,
                        });
                    }
                }
            }
        }
        if self.replicates == 0 {
            return Err(SimError::NoReplicates);
        }
        if self.estimators.is_empty() {
            return Err(SimError::NoEstimators);
        }
        let w = self.interval_width_sd;
        if !(w.is_finite() && w > 0.0) {
            return Err(SimError::InvalidIntervalWidth(w));
        }
        if let Some(mass) = self.interval_mass {
            if !(mass > 0.0 && mass < 1.0) {
                return Err(SimError::InvalidMass(mass));
            }
        }
        if !self.allow_mismatched {
            for e in &self.estimators {
                if let EstimatorId::Bayes { scenario } = e {
                    if !self.mode.matches(*scenario) {
                        return Err(SimError::MismatchedScenario {
                            scenario: scenario.to_string(),
                            mode: self.mode.name(),
                        });
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Replicate {
    pub counts: SearchCounts,
    pub true_missed: u64,
}

/// Generator for replicate `index`.
pub fn replicate_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Draws one data set. The config is assumed valid.
pub fn simulate_replicate<R: Rng + ?Sized>(config: &SimConfig, rng: &mut R) -> Replicate {
    let n = config.true_n;
    let (n_a, n_b, n_ab) = match config.mode {
        SearchMode::FullSearch { p_a, p_b } => {
            let (mut a, mut b, mut ab) = (0u64, 0u64, 0u64);
            for _ in 0..n {
                let found_a = rng.random_bool(p_a);
                let found_b = rng.random_bool(p_b);
                a += u64::from(found_a);
                b += u64::from(found_b);
                ab += u64::from(found_a && found_b);
            }
            (a, b, ab)
        }
        SearchMode::FixedSample { n_a, n_b } => {
            let size = n as usize;
            let mut marked = vec![false; size];
            for i in index::sample(rng, size, n_a as usize) {
                marked[i] = true;
            }
            let ab = index::sample(rng, size, n_b as usize)
                .into_iter()
                .filter(|&i| marked[i])
                .count() as u64;
            (n_a, n_b, ab)
        }
    };
    let counts = SearchCounts::new(n_a, n_b, n_ab).expect("simulated counts are consistent");
    Replicate {
        counts,
        true_missed: n - counts.n_f(),
    }
}

/// One estimator applied to one replicate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scored {
    /// Point estimate of the missed count; `None` when undefined.
    pub estimate: Option<f64>,
    /// Whether `estimate ± width·sd` contains the truth; `None` when the
    /// interval is undefined.
    pub covered: Option<bool>,
    /// Same for the credible interval, when requested.
    pub credible_covered: Option<bool>,
}

fn score(config: &SimConfig, estimator: EstimatorId, rep: &Replicate) -> Scored {
    let counts = &rep.counts;
    let truth = rep.true_missed as f64;
    let width = config.interval_width_sd;
    let contains = |centre: f64, sd: f64| (truth - centre).abs() <= width * sd;
    match estimator {
        EstimatorId::Bayes { scenario } => {
            let mean = mean_exact(counts, scenario).value();
            let sd = sd_exact(counts, scenario).value();
            let credible_covered = config.interval_mass.and_then(|mass| {
                let table = build_table(counts, scenario, CREDIBLE_TAIL_TOL).ok()?;
                let ci = table.credible_interval(mass).ok()?;
                Some((ci.lower..=ci.upper).contains(&rep.true_missed))
            });
            Scored {
                estimate: mean,
                covered: mean.zip(sd).map(|(m, s)| contains(m, s)),
                credible_covered,
            }
        }
        EstimatorId::Chapman => {
            let m = chapman(counts).missed;
            Scored {
                estimate: Some(m),
                covered: Some(contains(m, seber_variance(counts).sqrt())),
                credible_covered: None,
            }
        }
        EstimatorId::LincolnPetersen => {
            let m = lincoln_petersen(counts).map(|e| e.missed);
            Scored {
                estimate: m,
                covered: m.map(|m| contains(m, seber_variance(counts).sqrt())),
                credible_covered: None,
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSummary {
    pub estimator: EstimatorId,
    pub label: String,
    pub defined: u64,
    pub undefined: u64,
    pub fraction_undefined: f64,
    /// Mean estimate over replicates where it is defined.
    pub mean_estimate: Option<f64>,
    /// Mean of `estimate - true_missed`, defined replicates only.
    pub mean_bias: Option<f64>,
    /// Monte Carlo standard error of `mean_bias`.
    pub bias_se: Option<f64>,
    pub rmse: Option<f64>,
    /// Fraction of replicates with a defined interval that contain the truth.
    pub coverage: Option<f64>,
    pub coverage_n: u64,
    pub credible_coverage: Option<f64>,
    pub credible_coverage_n: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapStats {
    pub mean: f64,
    pub sd: f64,
    pub se: f64,
    /// `(n_ab, replicate count)` pairs in increasing `n_ab`.
    pub histogram: Vec<(u64, u64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub dof: u64,
    pub p_value: f64,
    /// Pooled bins as inclusive `n_ab` ranges.
    pub bins: Vec<(u64, u64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub replicate: u64,
    pub n_a: u64,
    pub n_b: u64,
    pub n_ab: u64,
    pub true_missed: u64,
    pub estimates: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub config: SimConfig,
    pub rng: String,
    pub mean_true_missed: f64,
    pub n_ab: OverlapStats,
    /// Goodness of fit of `n_ab` to the hypergeometric law; fixed-sample
    /// mode only, and only when at least two pooled bins remain.
    pub chi_square: Option<ChiSquareTest>,
    pub estimators: Vec<EstimatorSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log: Option<Vec<ReplicateRecord>>,
}

pub fn run(config: &SimConfig) -> Result<SimResult, SimError> {
    config.validate()?;
    let outcomes: Vec<(Replicate, Vec<Scored>)> = (0..config.replicates)
        .into_par_iter()
        .map(|i| {
            let mut rng = replicate_rng(config.seed, i);
            let rep = simulate_replicate(config, &mut rng);
            let scored = config.estimators.iter().map(|&e| score(config, e, &rep)).collect();
            (rep, scored)
        })
        .collect();

    let reps = config.replicates as f64;
    let mean_true_missed = outcomes
        .iter()
        .map(|(r, _)| r.true_missed as f64)
        .collect::<NeumaierSum>()
        .value()
        / reps;

    let estimators = config
        .estimators
        .iter()
        .enumerate()
        .map(|(k, &id)| summarize(id, outcomes.iter().map(|(r, s)| (r, &s[k]))))
        .collect();

    let overlaps: Vec<u64> = outcomes.iter().map(|(r, _)| r.counts.n_ab()).collect();
    let n_ab = overlap_stats(&overlaps);
    let chi_square = match config.mode {
        SearchMode::FixedSample { n_a, n_b } => {
            hypergeometric_chi_square(&n_ab.histogram, config.true_n, n_a, n_b, config.replicates)
        }
        SearchMode::FullSearch { .. } => None,
    };
    let log = config.keep_log.then(|| {
        outcomes
            .iter()
            .enumerate()
            .map(|(i, (r, s))| ReplicateRecord {
                replicate: i as u64,
                n_a: r.counts.n_a(),
                n_b: r.counts.n_b(),
                n_ab: r.counts.n_ab(),
                true_missed: r.true_missed,
                estimates: s.iter().map(|s| s.estimate).collect(),
            })
            .collect()
    });
    Ok(SimResult {
        config: config.clone(),
        rng: RNG_ALGORITHM.to_string(),
        mean_true_missed,
        n_ab,
        chi_square,
        estimators,
        log,
    })
}

fn summarize<'a>(
    id: EstimatorId,
    rows: impl Iterator<Item = (&'a Replicate, &'a Scored)>,
) -> EstimatorSummary {
    let (mut defined, mut undefined) = (0u64, 0u64);
    let mut est = NeumaierSum::default();
    let mut err = NeumaierSum::default();
    let mut err2 = NeumaierSum::default();
    let (mut cov_hit, mut cov_n) = (0u64, 0u64);
    let (mut cred_hit, mut cred_n) = (0u64, 0u64);
    for (rep, s) in rows {
        match s.estimate {
            Some(e) => {
                defined += 1;
                let d = e - rep.true_missed as f64;
                est.add(e);
                err.add(d);
                err2.add(d * d);
            }
            None => undefined += 1,
        }
        if let Some(c) = s.covered {
            cov_n += 1;
            cov_hit += u64::from(c);
        }
        if let Some(c) = s.credible_covered {
            cred_n += 1;
            cred_hit += u64::from(c);
        }
    }
    let n = defined as f64;
    let ratio = |hit: u64, total: u64| (total > 0).then(|| hit as f64 / total as f64);
    let mean_bias = (defined > 0).then(|| err.value() / n);
    let bias_se = mean_bias.filter(|_| defined > 1).map(|b| {
        let var = ((err2.value() - n * b * b) / (n - 1.0)).max(0.0);
        (var / n).sqrt()
    });
    EstimatorSummary {
        estimator: id,
        label: id.to_string(),
        defined,
        undefined,
        fraction_undefined: undefined as f64 / (defined + undefined) as f64,
        mean_estimate: (defined > 0).then(|| est.value() / n),
        mean_bias,
        bias_se,
        rmse: (defined > 0).then(|| (err2.value() / n).sqrt()),
        coverage: ratio(cov_hit, cov_n),
        coverage_n: cov_n,
        credible_coverage: ratio(cred_hit, cred_n),
        credible_coverage_n: cred_n,
    }
}

fn overlap_stats(values: &[u64]) -> OverlapStats {
    let n = values.len() as f64;
    let mean = values.iter().map(|&v| v as f64).collect::<NeumaierSum>().value() / n;
    let ss = values
        .iter()
        .map(|&v| (v as f64 - mean).powi(2))
        .collect::<NeumaierSum>()
        .value();
    let sd = if values.len() > 1 { (ss / (n - 1.0)).sqrt() } else { 0.0 };
    let mut sorted = values.to_vec();
    sorted.sort_unstable();
    let mut histogram: Vec<(u64, u64)> = Vec::new();
    for v in sorted {
        match histogram.last_mut() {
            Some((k, c)) if *k == v => *c += 1,
            _ => histogram.push((v, 1)),
        }
    }
    OverlapStats {
        mean,
        sd,
        se: sd / n.sqrt(),
        histogram,
    }
}

/// `ln P(n_ab = k)` when `n_b` of `total` items are drawn and `n_a` of them
/// are marked.
pub fn hypergeometric_ln_pmf(total: u64, n_a: u64, n_b: u64, k: u64) -> f64 {
    let ln_choose = |n: u64, r: u64| {
        if r > n {
            f64::NEG_INFINITY
        } else {
            ln_factorial(n) - ln_factorial(r) - ln_factorial(n - r)
        }
    };
    if k > n_b {
        return f64::NEG_INFINITY;
    }
    ln_choose(n_a, k) + ln_choose(total - n_a, n_b - k) - ln_choose(total, n_b)
}

/// Pearson chi-square of an `n_ab` histogram against the hypergeometric law,
/// pooling adjacent values until every bin expects at least five counts.
pub fn hypergeometric_chi_square(
    histogram: &[(u64, u64)],
    total: u64,
    n_a: u64,
    n_b: u64,
    replicates: u64,
) -> Option<ChiSquareTest> {
    let lo = (n_a + n_b).saturating_sub(total);
    let hi = n_a.min(n_b);
    let reps = replicates as f64;
    let observed = |k: u64| {
        histogram
            .binary_search_by_key(&k, |&(v, _)| v)
            .map_or(0, |i| histogram[i].1)
    };
    // (first, last, expected, observed)
    let mut bins: Vec<(u64, u64, f64, u64)> = Vec::new();
    let mut current: Option<(u64, u64, f64, u64)> = None;
    for k in lo..=hi {
        let e = reps * hypergeometric_ln_pmf(total, n_a, n_b, k).exp();
        let o = observed(k);
        let bin = match current.take() {
            Some((first, _, ce, co)) => (first, k, ce + e, co + o),
            None => (k, k, e, o),
        };
        if bin.2 >= MIN_EXPECTED {
            bins.push(bin);
        } else {
            current = Some(bin);
        }
    }
    if let Some(rest) = current {
        match bins.last_mut() {
            Some(last) => {
                last.1 = rest.1;
                last.2 += rest.2;
                last.3 += rest.3;
            }
            None => bins.push(rest),
        }
    }
    if bins.len() < 2 {
        return None;
    }
    let statistic = bins
        .iter()
        .map(|&(_, _, e, o)| (o as f64 - e).powi(2) / e)
        .collect::<NeumaierSum>()
        .value();
    let dof = bins.len() as u64 - 1;
    let dist = ChiSquared::new(dof as f64).ok()?;
    Some(ChiSquareTest {
        statistic,
        dof,
        p_value: dist.sf(statistic),
        bins: bins.iter().map(|&(a, b, _, _)| (a, b)).collect(),
    })
}

impl SimResult {
    /// One row per estimator.
    pub fn write_summary_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(
            out,
            "estimator,defined,undefined,fraction_undefined,mean_estimate,mean_bias,bias_se,rmse,coverage,credible_coverage"
        )?;
        let opt = |v: Option<f64>| v.map_or(String::new(), |v| v.to_string());
        for e in &self.estimators {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                e.label,
                e.defined,
                e.undefined,
                e.fraction_undefined,
                opt(e.mean_estimate),
                opt(e.mean_bias),
                opt(e.bias_se),
                opt(e.rmse),
                opt(e.coverage),
                opt(e.credible_coverage)
            )?;
        }
        Ok(())
    }

    /// Per-replicate counts and estimates; empty estimate cells mean
    /// undefined. Writes only the header when no log was kept.
    pub fn write_log_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        write!(out, "replicate,n_a,n_b,n_ab,true_missed")?;
        for e in &self.estimators {
            write!(out, ",{}", e.label)?;
        }
        writeln!(out)?;
        for r in self.log.iter().flatten() {
            write!(out, "{},{},{},{},{}", r.replicate, r.n_a, r.n_b, r.n_ab, r.true_missed)?;
            for v in &r.estimates {
                match v {
                    Some(v) => write!(out, ",{v}")?,
                    None => write!(out, ",")?,
                }
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixed(n: u64, a: u64, b: u64, reps: u64) -> SimConfig {
        SimConfig::new(n, SearchMode::FixedSample { n_a: a, n_b: b }, reps, 7)
    }

    #[test]
    fn certain_detection_finds_everything() {
        let cfg = SimConfig::new(40, SearchMode::FullSearch { p_a: 1.0, p_b: 1.0 }, 3, 1);
        let rep = simulate_replicate(&cfg, &mut replicate_rng(1, 0));
        assert_eq!(rep.counts, SearchCounts::new(40, 40, 40).unwrap());
        assert_eq!(rep.true_missed, 0);
    }

    #[test]
    fn marking_everything_forces_full_overlap() {
        let cfg = fixed(50, 50, 17, 20);
        for i in 0..20 {
            let rep = simulate_replicate(&cfg, &mut replicate_rng(3, i));
            assert_eq!(rep.counts.n_ab(), 17);
        }
    }

    #[test]
    fn validation() {
        assert_eq!(fixed(0, 0, 0, 1).validate(), Err(SimError::EmptyPopulation));
        assert!(matches!(fixed(10, 11, 2, 1).validate(), Err(SimError::SampleTooLarge { .. })));
        assert_eq!(fixed(10, 5, 5, 0).validate(), Err(SimError::NoReplicates));
        let bad = SimConfig::new(10, SearchMode::FullSearch { p_a: 0.0, p_b: 0.5 }, 1, 0);
        assert!(matches!(bad.validate(), Err(SimError::InvalidProbability { name: "p_a", .. })));
        let mut mismatched = fixed(100, 30, 30, 1);
        mismatched.estimators = vec![EstimatorId::Bayes {
            scenario: Scenario::FullSearchAlmostConstantPrior,
        }];
        assert!(matches!(mismatched.validate(), Err(SimError::MismatchedScenario { .. })));
        mismatched.allow_mismatched = true;
        assert!(mismatched.validate().is_ok());
    }

    #[test]
    fn estimator_ids_round_trip() {
        for id in [
            EstimatorId::Chapman,
            EstimatorId::LincolnPetersen,
            EstimatorId::Bayes { scenario: Scenario::FixedSample },
            EstimatorId::Bayes { scenario: Scenario::Shift(7) },
        ] {
            assert_eq!(id.to_string().parse::<EstimatorId>().unwrap(), id);
        }
        assert!("nope".parse::<EstimatorId>().is_err());
    }

    #[test]
    fn hypergeometric_pmf_sums_to_one() {
        let total: f64 = (0..=20).map(|k| hypergeometric_ln_pmf(60, 20, 25, k).exp()).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn deterministic_and_order_independent() {
        let mut cfg = fixed(200, 60, 60, 200);
        cfg.keep_log = true;
        let a = run(&cfg).unwrap();
        let b = run(&cfg).unwrap();
        assert_eq!(a, b);
        let serial: Vec<_> = (0..200)
            .map(|i| simulate_replicate(&cfg, &mut replicate_rng(cfg.seed, i)).counts.n_ab())
            .collect();
        let logged: Vec<_> = a.log.unwrap().iter().map(|r| r.n_ab).collect();
        assert_eq!(serial, logged);
    }

    #[test]
    fn undefined_estimates_are_counted() {
        // tiny overlaps make the fixed-sample mean undefined often
        let cfg = fixed(400, 15, 15, 300);
        let res = run(&cfg).unwrap();
        let bayes = &res.estimators[0];
        assert!(bayes.undefined > 0);
        assert_eq!(bayes.defined + bayes.undefined, 300);
        assert!((bayes.fraction_undefined - bayes.undefined as f64 / 300.0).abs() < 1e-15);
        assert_eq!(res.estimators[1].undefined, 0);
    }

    #[test]
    fn csv_outputs_have_headers() {
        let mut cfg = fixed(100, 40, 40, 5);
        cfg.keep_log = true;
        let res = run(&cfg).unwrap();
        let mut buf = Vec::new();
        res.write_summary_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 4);
        let mut buf = Vec::new();
        res.write_log_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("replicate,n_a,n_b,n_ab,true_missed,bayes:fixed,chapman,lp"));
        assert_eq!(text.lines().count(), 6);
    }
}
