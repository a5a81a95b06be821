use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use super::ResultRow;
use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 13] = [
    "target",
    "method",
    "tuning",
    "seed",
    "n",
    "tau",
    "ess",
    "evals_per_indep",
    "seconds_per_indep",
    "ci_low",
    "ci_high",
    "reliable",
    "error_flag",
];

/// Formats `x` with six significant digits in the style of C's `%g`:
/// fixed notation for exponents in `[-4, 6)`, scientific otherwise, with
/// trailing zeros removed.
pub fn format_float(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    // Round to six significant digits first; the exponent of the rounded
    // value decides the notation.
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!(
            "{}e{sign}{:02}",
            trim_zeros(mantissa.to_string()),
            exp.abs()
        )
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn opt_float(v: Option<f64>) -> String {
    v.map(format_float).unwrap_or_default()
}

fn record(row: &ResultRow) -> [String; 13] {
    [
        row.target.clone(),
        row.method.clone(),
        format_float(row.tuning),
        row.seed.to_string(),
        row.n.to_string(),
        opt_float(row.tau),
        opt_float(row.ess),
        opt_float(row.evals_per_indep),
        opt_float(row.seconds_per_indep),
        opt_float(row.ci_low),
        opt_float(row.ci_high),
        row.reliable.map(|b| b.to_string()).unwrap_or_default(),
        row.error_flag.to_string(),
    ]
}

pub fn write_csv_to<W: Write>(rows: &[ResultRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(CSV_HEADER)?;
    for row in rows {
        w.write_record(record(row))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv(rows: &[ResultRow], path: impl AsRef<Path>) -> Result<()> {
    write_csv_to(rows, File::create(path)?)
}

fn parse_opt<T: std::str::FromStr>(field: &str, name: &str, line: u64) -> Result<Option<T>> {
    if field.is_empty() {
        return Ok(None);
    }
    field
        .parse()
        .map(Some)
        .map_err(|_| Error::Config(format!("line {line}: cannot parse {name} from '{field}'")))
}

fn parse_req<T: std::str::FromStr>(field: &str, name: &str, line: u64) -> Result<T> {
    parse_opt(field, name, line)?
        .ok_or_else(|| Error::Config(format!("line {line}: missing {name}")))
}

/// Parses a results table; the header must match [`CSV_HEADER`] exactly.
pub fn read_csv<R: Read>(input: R) -> Result<Vec<ResultRow>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(input);
    let header = reader.headers()?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::Config(format!(
            "unexpected CSV header '{}'",
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let f = |i: usize| rec.get(i).unwrap_or("");
        rows.push(ResultRow {
            target: f(0).to_string(),
            method: f(1).to_string(),
            tuning: parse_req(f(2), "tuning", line)?,
            seed: parse_req(f(3), "seed", line)?,
            n: parse_req(f(4), "n", line)?,
            tau: parse_opt(f(5), "tau", line)?,
            ess: parse_opt(f(6), "ess", line)?,
            evals_per_indep: parse_opt(f(7), "evals_per_indep", line)?,
            seconds_per_indep: parse_opt(f(8), "seconds_per_indep", line)?,
            ci_low: parse_opt(f(9), "ci_low", line)?,
            ci_high: parse_opt(f(10), "ci_high", line)?,
            reliable: parse_opt(f(11), "reliable", line)?,
            error_flag: parse_req(f(12), "error_flag", line)?,
        });
    }
    Ok(rows)
}
