//! `id,na,nb,nab` rows in, one estimate row out per input row.

use std::io::{Read, Write};

use omest::classical::{chapman, lincoln_petersen, seber_variance};
use omest::{Moment, MomentReport, Scenario, SearchCounts};

use crate::error::CliError;
use crate::render::{fmt_moment, fmt_sig};

pub const OUTPUT_HEADER: [&str; 12] = [
    "id", "na", "nb", "nab", "mean", "sd", "skewness", "kurtosis", "chapman", "lp", "seber_sd", "status",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ReportKind {
    /// Missed-item counts X.
    Missed,
    /// Population totals N = n_f + X.
    Totals,
}

#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct BatchSummary {
    pub rows: usize,
    pub errors: usize,
}

fn column(headers: &csv::StringRecord, name: &str) -> Result<usize, CliError> {
    headers
        .iter()
        .position(|h| h.trim().eq_ignore_ascii_case(name))
        .ok_or_else(|| CliError::Usage(format!("input is missing the '{name}' column")))
}

fn parse_row(record: &csv::StringRecord, cols: [usize; 3]) -> Result<SearchCounts, String> {
    let field = |i: usize, name: &str| -> Result<u64, String> {
        let raw = record.get(i).ok_or_else(|| format!("missing {name}"))?.trim();
        raw.parse::<u64>()
            .map_err(|_| format!("{name} = '{raw}' is not a non-negative integer"))
    };
    let (na, nb, nab) = (field(cols[0], "na")?, field(cols[1], "nb")?, field(cols[2], "nab")?);
    SearchCounts::new(na, nb, nab).map_err(|e| e.to_string())
}

/// The numeric cells of one output row, rendered exactly as `estimate`
/// prints them.
pub fn estimate_cells(counts: &SearchCounts, scenario: Scenario, kind: ReportKind, sig: u8) -> [String; 7] {
    let r = MomentReport::new(*counts, scenario);
    let offset = match kind {
        ReportKind::Missed => 0.0,
        ReportKind::Totals => counts.n_f() as f64,
    };
    let ch = chapman(counts);
    let lp = match lincoln_petersen(counts) {
        Some(e) => Moment::Defined {
            value: match kind {
                ReportKind::Missed => e.missed,
                ReportKind::Totals => e.total,
            },
        },
        None => Moment::Undefined { min_n_ab: 1 },
    };
    [
        fmt_moment(r.mean.map(|m| m + offset), sig),
        fmt_moment(r.sd, sig),
        fmt_moment(r.skewness, sig),
        fmt_moment(r.kurtosis, sig),
        fmt_sig(
            match kind {
                ReportKind::Missed => ch.missed,
                ReportKind::Totals => ch.total,
            },
            sig,
        ),
        fmt_moment(lp, sig),
        fmt_sig(seber_variance(counts).sqrt(), sig),
    ]
}

/// Processes every row, reporting bad rows on `diagnostics` and marking
/// them `error` in the output; only unreadable input or a missing column
/// aborts.
pub fn run<R: Read, W: Write, D: Write>(
    input: R,
    output: W,
    mut diagnostics: D,
    scenario: Scenario,
    kind: ReportKind,
    sig: u8,
) -> Result<BatchSummary, CliError> {
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(input);
    let headers = reader.headers()?.clone();
    let id_col = column(&headers, "id")?;
    let cols = [column(&headers, "na")?, column(&headers, "nb")?, column(&headers, "nab")?];
    let mut writer = csv::Writer::from_writer(output);
    writer.write_record(OUTPUT_HEADER)?;
    let mut summary = BatchSummary::default();
    for (i, record) in reader.records().enumerate() {
        summary.rows += 1;
        let line = i + 2;
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                summary.errors += 1;
                writeln!(diagnostics, "row {line}: {e}")?;
                writer.write_record(["", "", "", "", "", "", "", "", "", "", "", "error"])?;
                continue;
            }
        };
        let raw = |c: usize| record.get(c).unwrap_or("").trim().to_string();
        let id = raw(id_col);
        match parse_row(&record, cols) {
            Ok(counts) => {
                let cells = estimate_cells(&counts, scenario, kind, sig);
                let mut row = vec![
                    id,
                    counts.n_a().to_string(),
                    counts.n_b().to_string(),
                    counts.n_ab().to_string(),
                ];
                row.extend(cells);
                row.push("ok".into());
                writer.write_record(&row)?;
            }
            Err(msg) => {
                summary.errors += 1;
                writeln!(diagnostics, "row {line} (id {id}): {msg}")?;
                let (na, nb, nab) = (raw(cols[0]), raw(cols[1]), raw(cols[2]));
                let mut row = vec![id, na, nb, nab];
                row.extend(std::iter::repeat_n(String::new(), 7));
                row.push("error".into());
                writer.write_record(&row)?;
            }
        }
    }
    writer.flush()?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_str(input: &str, kind: ReportKind) -> (String, String, BatchSummary) {
        let mut out = Vec::new();
        let mut diag = Vec::new();
        let s = run(input.as_bytes(), &mut out, &mut diag, Scenario::FullSearchAlmostConstantPrior, kind, 4)
            .unwrap();
        (String::from_utf8(out).unwrap(), String::from_utf8(diag).unwrap(), s)
    }

    #[test]
    fn header_only_gives_header_only() {
        let (out, diag, s) = run_str("id,na,nb,nab\n", ReportKind::Missed);
        assert_eq!(out.trim(), OUTPUT_HEADER.join(","));
        assert!(diag.is_empty());
        assert_eq!(s, BatchSummary { rows: 0, errors: 0 });
    }

    #[test]
    fn bad_rows_do_not_stop_processing() {
        let input = "id,na,nb,nab\na,10,10,10\nb,5,4,9\nc,x,1,1\nd,21,19,1\n";
        let (out, diag, s) = run_str(input, ReportKind::Missed);
        let rows: Vec<_> = out.lines().skip(1).collect();
        assert_eq!(rows.len(), 4);
        assert!(rows[0].ends_with(",ok"));
        assert_eq!(rows[1], "b,5,4,9,,,,,,,,error");
        assert!(rows[2].ends_with(",error"));
        assert!(rows[3].starts_with("d,21,19,1,"));
        assert!(rows[3].contains("undefined (n_ab >= 2)"));
        assert_eq!(s.errors, 2);
        assert_eq!(diag.lines().count(), 2);
    }

    #[test]
    fn missing_column_is_fatal() {
        let mut out = Vec::new();
        let err = run("id,na,nb\n1,2,3\n".as_bytes(), &mut out, Vec::new(), Scenario::FixedSample, ReportKind::Missed, 4)
            .unwrap_err();
        assert!(matches!(err, CliError::Usage(_)));
    }

    #[test]
    fn totals_report() {
        let (out, _, _) = run_str("id,na,nb,nab\nmale,323,101,3\n", ReportKind::Totals);
        let row: Vec<_> = out.lines().nth(1).unwrap().split(',').collect();
        assert_eq!(row[4], "11014");
        assert_eq!(row[5], "7638");
        assert_eq!(row[8], "8261");
        assert_eq!(row[9], "10874");
        assert_eq!(row[10], "3599");
    }
}
