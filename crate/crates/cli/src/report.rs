use std::fmt::Write as _;

use omest::classical::ClassicalReport;
use omest::posterior::{build_table_with, IntervalWithMass, TableMoment, TableOptions, WeightFamily};
use omest::{Moment, MomentReport, Scenario, SearchCounts};
use serde::Serialize;

use crate::render::{fmt_moment, fmt_opt, fmt_sig};

#[derive(Debug, Clone, Serialize)]
pub struct Request {
    pub counts: SearchCounts,
    pub x_a: u64,
    pub x_b: u64,
    pub n_f: u64,
    pub scenario: String,
    pub shift: u32,
    pub include_classical: bool,
    pub include_posterior: bool,
    pub interval_mass: f64,
    pub tail_tol: f64,
}

impl Request {
    pub fn new(
        counts: SearchCounts,
        scenario: Scenario,
        include_classical: bool,
        include_posterior: bool,
        interval_mass: f64,
        tail_tol: f64,
    ) -> Request {
        Request {
            counts,
            x_a: counts.x_a(),
            x_b: counts.x_b(),
            n_f: counts.n_f(),
            scenario: scenario.to_string(),
            shift: scenario.shift(),
            include_classical,
            include_posterior,
            interval_mass,
            tail_tol,
        }
    }
}

/// Population total `N = n_f + X`.
#[derive(Debug, Clone, Serialize)]
pub struct Totals {
    pub mean: Moment,
    pub sd: Moment,
}

#[derive(Debug, Clone, Serialize)]
pub struct PosteriorSummary {
    pub family: WeightFamily,
    pub x_max: u64,
    pub tail_mass_bound: f64,
    pub mode: u64,
    pub mode_total: u64,
    pub interval: IntervalWithMass,
    pub table_mean: TableMoment,
}

#[derive(Debug, Clone, Serialize)]
pub struct Discrepancy {
    /// Exact posterior mean minus Chapman's missed-item estimate.
    pub exact_minus_chapman: Option<f64>,
    /// `x_a / n_ab`; null when nothing overlaps.
    pub validity_ratio_a: Option<f64>,
    pub validity_ratio_b: Option<f64>,
    pub poisson_regime: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub request: Request,
    pub moments: MomentReport,
    pub totals: Totals,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classical: Option<ClassicalReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub posterior: Option<PosteriorSummary>,
    pub discrepancy: Discrepancy,
    pub warnings: Vec<String>,
}

pub fn build(request: Request, scenario: Scenario) -> Report {
    let counts = request.counts;
    let moments = MomentReport::new(counts, scenario);
    let n_f = counts.n_f() as f64;
    let classical = ClassicalReport::new(&counts);
    let mut warnings = Vec::new();

    if counts.n_ab() == 0 {
        warnings.push(
            "no item was found by both searchers; only the proper-prior scenario gives finite moments"
                .to_string(),
        );
    }
    for (name, m) in [
        ("mean", moments.mean),
        ("sd", moments.sd),
        ("skewness", moments.skewness),
        ("kurtosis", moments.kurtosis),
    ] {
        if let Moment::Undefined { min_n_ab } = m {
            warnings.push(format!(
                "{name} undefined under scenario {scenario}: needs n_ab >= {min_n_ab}"
            ));
        }
    }
    if moments.shape_shift_derived {
        warnings.push(format!(
            "skewness and kurtosis obtained through the shift s = {}",
            moments.shift
        ));
    }
    if classical.large_discrepancy_expected {
        warnings.push(
            "outside the Poisson regime (x_a/n_ab and x_b/n_ab not both in (0, 0.1]); \
             Chapman and Lincoln-Petersen are expected to underestimate the missed count"
                .to_string(),
        );
    }

    let posterior = if request.include_posterior {
        let options = TableOptions {
            tail_tol: request.tail_tol,
            ..TableOptions::default()
        };
        match build_table_with(&counts, scenario, &options)
            .and_then(|t| Ok((t.credible_interval(request.interval_mass)?, t)))
        {
            Ok((interval, table)) => Some(PosteriorSummary {
                family: table.family(),
                x_max: table.x_max(),
                tail_mass_bound: table.tail_mass_bound(),
                mode: table.mode(),
                mode_total: counts.n_f() + table.mode(),
                interval,
                table_mean: table.moment(1),
            }),
            Err(e) => {
                warnings.push(format!("posterior not computed: {e}"));
                None
            }
        }
    } else {
        None
    };

    let ratio = |x: u64| (counts.n_ab() > 0).then(|| x as f64 / counts.n_ab() as f64);
    let discrepancy = Discrepancy {
        exact_minus_chapman: moments.mean.value().map(|m| m - classical.chapman_missed),
        validity_ratio_a: ratio(counts.x_a()),
        validity_ratio_b: ratio(counts.x_b()),
        poisson_regime: !classical.large_discrepancy_expected,
    };
    Report {
        totals: Totals {
            mean: moments.mean.map(|m| n_f + m),
            sd: moments.sd,
        },
        moments,
        classical: request.include_classical.then_some(classical),
        posterior,
        discrepancy,
        warnings,
        request,
    }
}

const LABEL_WIDTH: usize = 24;

fn line(out: &mut String, label: &str, value: impl AsRef<str>) {
    let _ = writeln!(out, "{label:<LABEL_WIDTH$}{}", value.as_ref());
}

pub fn render_text(r: &Report, sig: u8) -> String {
    let mut out = String::new();
    let c = &r.request.counts;
    line(
        &mut out,
        "counts",
        format!(
            "n_a={} n_b={} n_ab={} (x_a={}, x_b={}, n_f={})",
            c.n_a(),
            c.n_b(),
            c.n_ab(),
            c.x_a(),
            c.x_b(),
            c.n_f()
        ),
    );
    line(
        &mut out,
        "scenario",
        format!("{} ({}), shift {}", r.request.scenario, r.moments.scenario.label(), r.request.shift),
    );
    out.push('\n');
    let m = &r.moments;
    let shape_note = if m.shape_shift_derived { " (shift-derived)" } else { "" };
    line(&mut out, "<X> missed", fmt_moment(m.mean, sig));
    line(&mut out, "sd(X)", fmt_moment(m.sd, sig));
    let shaped = |v: Moment| match v {
        Moment::Defined { .. } => format!("{}{shape_note}", fmt_moment(v, sig)),
        _ => fmt_moment(v, sig),
    };
    line(&mut out, "skewness", shaped(m.skewness));
    line(&mut out, "kurtosis", shaped(m.kurtosis));
    line(&mut out, "<N> total", fmt_moment(r.totals.mean, sig));
    line(&mut out, "sd(N)", fmt_moment(r.totals.sd, sig));
    if let Some(b) = m.mean_error_bound {
        line(&mut out, "flat-prior bound <X>", format!("+/- {}", fmt_sig(b, sig)));
    }
    if let Some(b) = m.variance_error_bound {
        line(&mut out, "flat-prior bound var", format!("+/- {}", fmt_sig(b, sig)));
    }

    if let Some(cl) = &r.classical {
        out.push('\n');
        line(&mut out, "Chapman <N>", fmt_sig(cl.chapman_total, sig));
        line(&mut out, "Chapman <X>", fmt_sig(cl.chapman_missed, sig));
        line(&mut out, "Lincoln-Petersen <N>", fmt_moment(cl.lp_total, sig));
        line(&mut out, "Lincoln-Petersen <X>", fmt_moment(cl.lp_missed, sig));
        line(&mut out, "Seber sd", fmt_sig(cl.seber_sd, sig));
        if let Some(p) = &cl.poisson {
            line(&mut out, "Poisson rate X*", fmt_sig(p.mode_x_star, sig));
        }
    }

    if let Some(p) = &r.posterior {
        out.push('\n');
        line(&mut out, "posterior mode X", p.mode.to_string());
        line(&mut out, "posterior mode N", p.mode_total.to_string());
        line(
            &mut out,
            "credible interval X",
            format!(
                "[{}, {}] mass {} (requested {})",
                p.interval.lower,
                p.interval.upper,
                fmt_sig(p.interval.enclosed, sig),
                p.interval.mass
            ),
        );
        line(&mut out, "tail mass bound", format!("{:.2e}", p.tail_mass_bound));
    }

    out.push('\n');
    let d = &r.discrepancy;
    line(&mut out, "exact - Chapman <X>", fmt_opt(d.exact_minus_chapman, sig));
    line(
        &mut out,
        "validity ratios",
        format!("{}, {}", fmt_opt(d.validity_ratio_a, sig), fmt_opt(d.validity_ratio_b, sig)),
    );
    line(&mut out, "Poisson regime", if d.poisson_regime { "yes" } else { "no" });

    for w in &r.warnings {
        let _ = writeln!(out, "warning: {w}");
    }
    out
}
