use std::fmt;
use std::io::{Read, Write};
use std::path::PathBuf;
use std::str::FromStr;

use crate::BenchError;

pub const CSV_HEADER: [&str; 9] = [
    "solver",
    "problem",
    "seed",
    "status",
    "iterations",
    "f_final",
    "grad_norm_final",
    "oracle_total",
    "wall_time_s",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RunStatus {
    Converged,
    BudgetExhausted,
    LineSearchFailed,
    Error,
}

impl RunStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RunStatus::Converged => "Converged",
            RunStatus::BudgetExhausted => "BudgetExhausted",
            RunStatus::LineSearchFailed => "LineSearchFailed",
            RunStatus::Error => "Error",
        }
    }
}

impl fmt::Display for RunStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RunStatus {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "Converged" => RunStatus::Converged,
            "BudgetExhausted" => RunStatus::BudgetExhausted,
            "LineSearchFailed" => RunStatus::LineSearchFailed,
            "Error" => RunStatus::Error,
            other => return Err(BenchError::Parse(format!("unknown status {other:?}"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub solver: String,
    pub problem: String,
    pub seed: u64,
    pub status: RunStatus,
    pub iterations: usize,
    pub f_final: f64,
    pub grad_norm_final: f64,
    pub oracle_total: f64,
    pub wall_time_s: f64,
    /// Per-iteration trace written next to the CSV, if any. Not part of the
    /// CSV row.
    pub trace_path: Option<PathBuf>,
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_float(field: &str, name: &str) -> Result<f64, BenchError> {
    field
        .parse()
        .map_err(|_| BenchError::Parse(format!("bad {name} value {field:?}")))
}

pub fn write_records<W: Write>(writer: W, records: &[RunRecord]) -> Result<(), BenchError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(writer);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record([
            r.solver.clone(),
            r.problem.clone(),
            r.seed.to_string(),
            r.status.to_string(),
            r.iterations.to_string(),
            format_float(r.f_final),
            format_float(r.grad_norm_final),
            format_float(r.oracle_total),
            format_float(r.wall_time_s),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records<R: Read>(reader: R) -> Result<Vec<RunRecord>, BenchError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(BenchError::Parse(format!("unexpected header {:?}", header.iter().collect::<Vec<_>>())));
    }
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let seed = row[2]
            .parse()
            .map_err(|_| BenchError::Parse(format!("bad seed {:?}", &row[2])))?;
        let iterations = row[4]
            .parse()
            .map_err(|_| BenchError::Parse(format!("bad iterations {:?}", &row[4])))?;
        out.push(RunRecord {
            solver: row[0].to_string(),
            problem: row[1].to_string(),
            seed,
            status: row[3].parse()?,
            iterations,
            f_final: parse_float(&row[5], "f_final")?,
            grad_norm_final: parse_float(&row[6], "grad_norm_final")?,
            oracle_total: parse_float(&row[7], "oracle_total")?,
            wall_time_s: parse_float(&row[8], "wall_time_s")?,
            trace_path: None,
        });
    }
    Ok(out)
}
