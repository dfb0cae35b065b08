mod batch;
mod error;
mod render;
mod report;
mod simulate;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use omest::posterior::{build_table_with, TableOptions, WeightFamily, DEFAULT_MAX_TERMS};
use omest::{Scenario, SearchCounts};
use serde::Serialize;

use crate::batch::ReportKind;
use crate::error::CliError;
use crate::render::fmt_sig;

#[derive(Debug, Parser)]
#[command(name = "omest", version, about = "Estimate how many items two independent searches both missed")]
struct Cli {
    /// Significant figures in text and batch output.
    #[arg(
        long,
        global = true,
        env = "OMEST_PRECISION",
        default_value_t = 4,
        value_parser = clap::value_parser!(u8).range(1..=17)
    )]
    precision: u8,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Posterior moments of the missed count for one set of counts.
    Estimate(EstimateArgs),
    /// Same as `estimate --compare`.
    Compare(EstimateArgs),
    /// Tabulate the posterior distribution.
    Posterior(PosteriorArgs),
    /// Estimate every row of an `id,na,nb,nab` CSV file.
    Batch(BatchArgs),
    /// Monte Carlo check of the estimators.
    Simulate(simulate::SimulateArgs),
}

#[derive(Debug, Args)]
struct CountArgs {
    /// Items found by A.
    #[arg(long)]
    na: u64,
    /// Items found by B.
    #[arg(long)]
    nb: u64,
    /// Items found by both.
    #[arg(long)]
    nab: u64,
}

impl CountArgs {
    fn counts(&self) -> Result<SearchCounts, CliError> {
        Ok(SearchCounts::new(self.na, self.nb, self.nab)?)
    }
}

fn parse_scenario(s: &str) -> Result<Scenario, String> {
    s.parse()
}

#[derive(Debug, Args)]
struct EstimateArgs {
    #[command(flatten)]
    counts: CountArgs,
    /// fixed, partial, full, proper-prior or shift:<s>.
    #[arg(long, default_value = "full", value_parser = parse_scenario)]
    scenario: Scenario,
    /// Include Lincoln-Petersen, Chapman and Seber.
    #[arg(long)]
    compare: bool,
    /// Include posterior mode and credible interval.
    #[arg(long)]
    posterior: bool,
    #[arg(long, default_value_t = 0.95)]
    mass: f64,
    #[arg(long, default_value_t = 1e-10)]
    tail_tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TableFormat {
    Csv,
    Json,
}

#[derive(Debug, Args)]
struct PosteriorArgs {
    #[command(flatten)]
    counts: CountArgs,
    #[arg(long, default_value = "full", value_parser = parse_scenario, conflicts_with = "flat_prior")]
    scenario: Scenario,
    /// Full search with a flat prior on N instead of a shifted scenario.
    #[arg(long)]
    flat_prior: bool,
    #[arg(long, default_value_t = 0.95)]
    mass: f64,
    #[arg(long, default_value_t = 1e-11)]
    tail_tol: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_TERMS)]
    max_terms: u64,
    /// Where to write the table.
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = TableFormat::Csv)]
    table_format: TableFormat,
}

#[derive(Debug, Args)]
struct BatchArgs {
    /// Input CSV with columns id,na,nb,nab.
    input: PathBuf,
    /// Output CSV; standard output when omitted.
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[arg(long, default_value = "full", value_parser = parse_scenario)]
    scenario: Scenario,
    /// Report missed counts X or population totals N.
    #[arg(long, value_enum, default_value_t = ReportKind::Missed)]
    report: ReportKind,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(error::EXIT_VALIDATION)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Io(e)) if e.kind() == io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    let sig = cli.precision;
    match cli.command {
        Command::Estimate(args) => estimate(&mut out, args, false, cli.format, sig)?,
        Command::Compare(args) => estimate(&mut out, args, true, cli.format, sig)?,
        Command::Posterior(args) => posterior(&mut out, args, cli.format, sig)?,
        Command::Batch(args) => {
            let input = File::open(&args.input).map_err(CliError::file(&args.input))?;
            let summary = match &args.output {
                Some(path) => {
                    let file = File::create(path).map_err(CliError::file(path))?;
                    batch::run(input, BufWriter::new(file), io::stderr(), args.scenario, args.report, sig)?
                }
                None => batch::run(input, &mut out, io::stderr(), args.scenario, args.report, sig)?,
            };
            if summary.errors > 0 {
                eprintln!("{} of {} rows had errors", summary.errors, summary.rows);
            }
        }
        Command::Simulate(args) => {
            let config = simulate::config_from_args(&args)?;
            let result = omest::simulator::run(&config)?;
            if let Some(path) = &args.output {
                let file = File::create(path).map_err(CliError::file(path))?;
                serde_json::to_writer_pretty(BufWriter::new(file), &result)?;
            }
            if let Some(path) = &args.csv {
                let file = File::create(path).map_err(CliError::file(path))?;
                result.write_summary_csv(BufWriter::new(file))?;
            }
            if let Some(path) = &args.log {
                let file = File::create(path).map_err(CliError::file(path))?;
                result.write_log_csv(BufWriter::new(file))?;
            }
            match cli.format {
                Format::Text => write!(out, "{}", simulate::render_text(&result, sig))?,
                Format::Json => {
                    let mut brief = result.clone();
                    brief.log = None;
                    serde_json::to_writer_pretty(&mut out, &brief)?;
                    writeln!(out)?;
                }
            }
        }
    }
    out.flush()?;
    Ok(())
}

fn check_fraction(name: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(CliError::Usage(format!("--{name} must be in (0, 1), got {v}")))
    }
}

fn estimate<W: Write>(out: &mut W, args: EstimateArgs, force_compare: bool, format: Format, sig: u8) -> Result<(), CliError> {
    let counts = args.counts.counts()?;
    if args.posterior {
        check_fraction("mass", args.mass)?;
        check_fraction("tail-tol", args.tail_tol)?;
    }
    let request = report::Request::new(
        counts,
        args.scenario,
        args.compare || force_compare,
        args.posterior,
        args.mass,
        args.tail_tol,
    );
    let r = report::build(request, args.scenario);
    match format {
        Format::Text => write!(out, "{}", report::render_text(&r, sig))?,
        Format::Json => {
            serde_json::to_writer_pretty(&mut *out, &r)?;
            writeln!(out)?;
        }
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct PosteriorOutput {
    counts: SearchCounts,
    family: WeightFamily,
    tail_tol: f64,
    x_max: u64,
    decay: u64,
    log_norm: f64,
    tail_mass_bound: f64,
    tail_mass_estimate: f64,
    mode: u64,
    mode_total: u64,
    interval: omest::posterior::IntervalWithMass,
    mean: omest::posterior::TableMoment,
    variance: Option<f64>,
    table_path: Option<PathBuf>,
}

fn posterior<W: Write>(out: &mut W, args: PosteriorArgs, format: Format, sig: u8) -> Result<(), CliError> {
    let counts = args.counts.counts()?;
    check_fraction("mass", args.mass)?;
    let family = if args.flat_prior {
        WeightFamily::FlatPriorFullSearch
    } else {
        WeightFamily::from(args.scenario)
    };
    let options = TableOptions {
        tail_tol: args.tail_tol,
        max_terms: args.max_terms,
    };
    let table = build_table_with(&counts, family, &options)?;
    let interval = table.credible_interval(args.mass)?;
    if let Some(path) = &args.output {
        let file = BufWriter::new(File::create(path).map_err(CliError::file(path))?);
        match args.table_format {
            TableFormat::Csv => table.write_csv(file)?,
            TableFormat::Json => serde_json::to_writer(file, &table.export())?,
        }
    }
    let mean = table.moment(1);
    let second = table.moment(2);
    let variance = (mean.convergent && second.convergent).then(|| second.value - mean.value * mean.value);
    let summary = PosteriorOutput {
        counts,
        family,
        tail_tol: args.tail_tol,
        x_max: table.x_max(),
        decay: table.decay(),
        log_norm: table.log_norm(),
        tail_mass_bound: table.tail_mass_bound(),
        tail_mass_estimate: table.tail_mass_estimate(),
        mode: table.mode(),
        mode_total: counts.n_f() + table.mode(),
        interval,
        mean,
        variance,
        table_path: args.output.clone(),
    };
    match format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut *out, &summary)?;
            writeln!(out)?;
        }
        Format::Text => {
            let family_label = match family {
                WeightFamily::Shifted { scenario } => {
                    format!("{scenario} ({}), shift {}", scenario.label(), scenario.shift())
                }
                WeightFamily::FlatPriorFullSearch => "full search, flat prior".to_string(),
            };
            writeln!(out, "{:<24}{counts}", "counts")?;
            writeln!(out, "{:<24}{family_label}", "weights")?;
            writeln!(out, "{:<24}0..={} (tail decays like X^-{})", "table X", summary.x_max, summary.decay)?;
            writeln!(out, "{:<24}{:.2e}", "tail mass bound", summary.tail_mass_bound)?;
            writeln!(out, "{:<24}{}", "posterior mode X", summary.mode)?;
            writeln!(out, "{:<24}{}", "posterior mode N", summary.mode_total)?;
            writeln!(
                out,
                "{:<24}[{}, {}] mass {} (requested {})",
                "credible interval X",
                interval.lower,
                interval.upper,
                fmt_sig(interval.enclosed, sig),
                interval.mass
            )?;
            let mean_text = if mean.convergent {
                fmt_sig(mean.value, sig)
            } else {
                format!("diverges (table-only sum {})", fmt_sig(mean.value, sig))
            };
            writeln!(out, "{:<24}{mean_text}", "table mean X")?;
            if let Some(v) = variance {
                writeln!(out, "{:<24}{}", "table sd X", fmt_sig(v.max(0.0).sqrt(), sig))?;
            }
            if let Some(path) = &args.output {
                writeln!(out, "{:<24}{}", "table written", path.display())?;
            }
        }
    }
    Ok(())
}
