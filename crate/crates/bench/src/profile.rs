//! Dolan-Moré performance profiles.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use crate::record::{format_float, RunRecord, RunStatus};
use crate::BenchError;

/// Offset keeping shifted objective values strictly positive.
pub const F_SHIFT: f64 = 1e-16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    FFinal,
    GradNormFinal,
    OracleTotal,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::FFinal, Metric::GradNormFinal, Metric::OracleTotal];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::FFinal => "f_final",
            Metric::GradNormFinal => "grad_norm_final",
            Metric::OracleTotal => "oracle_total",
        }
    }

    fn raw(self, r: &RunRecord) -> f64 {
        match self {
            Metric::FFinal => r.f_final,
            Metric::GradNormFinal => r.grad_norm_final,
            Metric::OracleTotal => r.oracle_total,
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Metric::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| BenchError::Parse(format!("unknown metric {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileCurve {
    pub solver: String,
    /// Step points `(tau, fraction)` with increasing `tau`, starting at 1.
    pub points: Vec<(f64, f64)>,
}

impl ProfileCurve {
    /// Right-continuous step value at `tau`.
    pub fn fraction_at(&self, tau: f64) -> f64 {
        self.points
            .iter()
            .take_while(|(t, _)| *t <= tau)
            .last()
            .map_or(0.0, |&(_, f)| f)
    }
}

/// Performance ratios `metric(s, p) / best_p` keyed by solver, one entry per
/// problem instance `(problem, seed)`. Failed or missing runs are infinite.
pub fn performance_ratios(records: &[RunRecord], metric: Metric) -> Result<BTreeMap<String, Vec<f64>>, BenchError> {
    if records.is_empty() {
        return Err(BenchError::Parse("no records to profile".into()));
    }
    let solvers: BTreeSet<&str> = records.iter().map(|r| r.solver.as_str()).collect();
    let instances: BTreeSet<(&str, u64)> = records.iter().map(|r| (r.problem.as_str(), r.seed)).collect();

    let solved = |r: &RunRecord| r.status == RunStatus::Converged && metric.raw(r).is_finite();
    let offset = match metric {
        Metric::FFinal => records
            .iter()
            .filter(|r| solved(r))
            .map(|r| r.f_final)
            .fold(f64::INFINITY, f64::min),
        _ => f64::NAN,
    };
    let value = |r: &RunRecord| {
        if !solved(r) {
            f64::INFINITY
        } else if metric == Metric::FFinal {
            r.f_final - offset + F_SHIFT
        } else {
            metric.raw(r)
        }
    };

    let mut table: BTreeMap<(&str, u64), BTreeMap<&str, f64>> = BTreeMap::new();
    for r in records {
        let cell = table.entry((r.problem.as_str(), r.seed)).or_default();
        let v = value(r);
        let slot = cell.entry(r.solver.as_str()).or_insert(f64::INFINITY);
        *slot = slot.min(v);
    }

    let mut out: BTreeMap<String, Vec<f64>> = solvers.iter().map(|s| (s.to_string(), Vec::new())).collect();
    for inst in &instances {
        let cell = &table[inst];
        let best = cell.values().copied().fold(f64::INFINITY, f64::min);
        for s in &solvers {
            let m = cell.get(s).copied().unwrap_or(f64::INFINITY);
            let ratio = if !best.is_finite() || !m.is_finite() {
                f64::INFINITY
            } else if best == 0.0 {
                if m == 0.0 {
                    1.0
                } else {
                    f64::INFINITY
                }
            } else {
                m / best
            };
            out.get_mut(*s).unwrap().push(ratio);
        }
    }
    Ok(out)
}

pub fn performance_profile(records: &[RunRecord], metric: Metric) -> Result<Vec<ProfileCurve>, BenchError> {
    let ratios = performance_ratios(records, metric)?;
    let mut taus: Vec<f64> = ratios.values().flatten().copied().filter(|r| r.is_finite()).collect();
    taus.push(1.0);
    taus.sort_by(f64::total_cmp);
    taus.dedup();
    Ok(ratios
        .into_iter()
        .map(|(solver, rs)| {
            let n = rs.len() as f64;
            let points = taus
                .iter()
                .map(|&tau| (tau, rs.iter().filter(|&&r| r <= tau).count() as f64 / n))
                .collect();
            ProfileCurve { solver, points }
        })
        .collect())
}

pub fn write_profile<W: Write>(writer: W, curves: &[ProfileCurve]) -> Result<(), BenchError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(writer);
    w.write_record(["solver", "tau", "fraction"])?;
    for c in curves {
        for &(tau, frac) in &c.points {
            w.write_record([c.solver.clone(), format_float(tau), format_float(frac)])?;
        }
    }
    w.flush()?;
    Ok(())
}
