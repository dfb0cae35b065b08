use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use omest::simulator::{EstimatorId, SearchMode, SimConfig, SimResult};

use crate::error::CliError;
use crate::render::{fmt_opt, fmt_sig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Fixed,
    Full,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// JSON simulation config; replaces all flags below except the outputs.
    #[arg(long, conflicts_with_all = ["true_n", "mode"])]
    pub config: Option<PathBuf>,
    #[arg(long, required_unless_present = "config")]
    pub true_n: Option<u64>,
    #[arg(long, value_enum, required_unless_present = "config")]
    pub mode: Option<ModeArg>,
    /// Sample size of A (fixed mode).
    #[arg(long)]
    pub na: Option<u64>,
    /// Sample size of B (fixed mode).
    #[arg(long)]
    pub nb: Option<u64>,
    /// Detection probability of A (full mode).
    #[arg(long)]
    pub pa: Option<f64>,
    /// Detection probability of B (full mode).
    #[arg(long)]
    pub pb: Option<f64>,
    #[arg(long, default_value_t = 1000)]
    pub reps: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Comma-separated: exact (posterior matched to the mode), bayes:<scenario>, chapman, lp.
    #[arg(long, value_delimiter = ',', default_value = "exact,chapman,lp")]
    pub estimators: Vec<String>,
    /// Intervals are estimate +/- width * sd.
    #[arg(long, default_value_t = 2.0)]
    pub width: f64,
    /// Also score shortest credible intervals of this mass (slower).
    #[arg(long)]
    pub mass: Option<f64>,
    /// Permit posterior scenarios that do not match the search mode.
    #[arg(long)]
    pub allow_mismatched: bool,
    /// Write the full result as JSON.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Write the per-estimator summary as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Keep and write per-replicate counts and estimates as CSV.
    #[arg(long)]
    pub log: Option<PathBuf>,
}

fn require<T>(v: Option<T>, flag: &str, mode: &str) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::Usage(format!("--{flag} is required in {mode} mode")))
}

pub fn config_from_args(args: &SimulateArgs) -> Result<SimConfig, CliError> {
    let mut config = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(CliError::file(path))?;
            serde_json::from_str::<SimConfig>(&text).map_err(|source| CliError::Config {
                path: path.clone(),
                source,
            })?
        }
        None => {
            let true_n = require(args.true_n, "true-n", "any")?;
            let mode = match args.mode.expect("clap enforces --mode") {
                ModeArg::Fixed => SearchMode::FixedSample {
                    n_a: require(args.na, "na", "fixed")?,
                    n_b: require(args.nb, "nb", "fixed")?,
                },
                ModeArg::Full => SearchMode::FullSearch {
                    p_a: require(args.pa, "pa", "full")?,
                    p_b: require(args.pb, "pb", "full")?,
                },
            };
            let mut config = SimConfig::new(true_n, mode, args.reps, args.seed);
            config.estimators = args
                .estimators
                .iter()
                .map(|e| match e.trim() {
                    "exact" => Ok(EstimatorId::Bayes {
                        scenario: mode.matched_scenario(),
                    }),
                    other => other.parse::<EstimatorId>().map_err(CliError::Usage),
                })
                .collect::<Result<_, _>>()?;
            config.interval_width_sd = args.width;
            config.interval_mass = args.mass;
            config.allow_mismatched = args.allow_mismatched;
            config
        }
    };
    if args.log.is_some() {
        config.keep_log = true;
    }
    config.validate()?;
    Ok(config)
}

pub fn render_text(r: &SimResult, sig: u8) -> String {
    let mut out = String::new();
    let c = &r.config;
    let mode = match c.mode {
        SearchMode::FixedSample { n_a, n_b } => format!("fixed sample, n_a={n_a}, n_b={n_b}"),
        SearchMode::FullSearch { p_a, p_b } => format!("full search, p_a={p_a}, p_b={p_b}"),
    };
    let _ = writeln!(
        out,
        "simulation      N={}, {mode}, {} replicates, seed {}",
        c.true_n, c.replicates, c.seed
    );
    let _ = writeln!(out, "rng             {}", r.rng);
    let _ = writeln!(out, "mean true X     {}", fmt_sig(r.mean_true_missed, sig));
    let _ = writeln!(
        out,
        "n_ab            mean {} (sd {}, se {})",
        fmt_sig(r.n_ab.mean, sig),
        fmt_sig(r.n_ab.sd, sig),
        fmt_sig(r.n_ab.se, sig)
    );
    if let Some(chi) = &r.chi_square {
        let _ = writeln!(
            out,
            "chi-square      X2 = {}, dof {}, p = {}",
            fmt_sig(chi.statistic, sig),
            chi.dof,
            fmt_sig(chi.p_value, sig)
        );
    }
    let _ = writeln!(
        out,
        "interval        estimate +/- {} sd{}",
        c.interval_width_sd,
        c.interval_mass
            .map_or(String::new(), |m| format!("; credible mass {m}"))
    );
    out.push('\n');
    let _ = writeln!(
        out,
        "{:<18}{:>9}{:>11}{:>12}{:>12}{:>10}{:>12}{:>10}{:>10}",
        "estimator", "defined", "undefined", "mean", "bias", "bias_se", "rmse", "coverage", "credible"
    );
    for e in &r.estimators {
        let _ = writeln!(
            out,
            "{:<18}{:>9}{:>11}{:>12}{:>12}{:>10}{:>12}{:>10}{:>10}",
            e.label,
            e.defined,
            e.undefined,
            fmt_opt(e.mean_estimate, sig),
            fmt_opt(e.mean_bias, sig),
            fmt_opt(e.bias_se, sig),
            fmt_opt(e.rmse, sig),
            fmt_opt(e.coverage, sig),
            fmt_opt(e.credible_coverage, sig)
        );
    }
    out
}
