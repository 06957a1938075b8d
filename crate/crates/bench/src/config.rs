//! Settings for the `bench` subcommand: a flat TOML file whose keys mirror
//! the command-line flags, with flags taking precedence.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::Deserialize;

use crate::grid::Solver;
use crate::protocol::Protocol;
use crate::BenchError;

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct FileConfig {
    pub solvers: Option<Vec<String>>,
    pub problems: Option<Vec<String>>,
    pub seeds: Option<Vec<u64>>,
    pub eps_g: Option<f64>,
    pub eps_h: Option<f64>,
    pub theta: Option<f64>,
    pub budget: Option<f64>,
    pub out: Option<PathBuf>,
    pub traces: Option<bool>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, BenchError> {
        Ok(toml::from_str(&std::fs::read_to_string(path)?)?)
    }
}

/// Comma-separated seeds, or a half-open range `a..b`.
pub fn parse_seeds(s: &str) -> Result<Vec<u64>, String> {
    if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|e| format!("bad range start: {e}"))?;
        let b: u64 = b.trim().parse().map_err(|e| format!("bad range end: {e}"))?;
        return Ok((a..b).collect());
    }
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| t.trim().parse().map_err(|e| format!("bad seed {t:?}: {e}")))
        .collect()
}

#[derive(Debug, Clone, Default, Args)]
pub struct BenchArgs {
    /// Comma-separated solver names
    #[arg(long, value_delimiter = ',')]
    pub solvers: Option<Vec<String>>,
    /// Comma-separated problem names
    #[arg(long, value_delimiter = ',')]
    pub problems: Option<Vec<String>>,
    /// Seeds as `0,1,2` or `0..3`
    #[arg(long, value_parser = parse_seeds)]
    pub seeds: Option<::std::vec::Vec<u64>>,
    #[arg(long)]
    pub eps_g: Option<f64>,
    #[arg(long)]
    pub eps_h: Option<f64>,
    #[arg(long)]
    pub theta: Option<f64>,
    /// Weighted oracle budget per run
    #[arg(long)]
    pub budget: Option<f64>,
    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write per-iteration Newton-MR traces next to the CSV
    #[arg(long)]
    pub traces: bool,
    /// TOML file with the same keys as these flags
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchSettings {
    pub solvers: Vec<Solver>,
    pub problems: Vec<String>,
    pub seeds: Vec<u64>,
    pub protocol: Protocol,
    pub out: PathBuf,
    pub traces: bool,
}

impl BenchSettings {
    pub fn resolve(args: &BenchArgs, file: &FileConfig) -> Result<Self, BenchError> {
        let mut protocol = Protocol::default();
        if let Some(v) = args.eps_g.or(file.eps_g) {
            protocol.eps_g = v;
        }
        if let Some(v) = args.eps_h.or(file.eps_h) {
            protocol.eps_h = v;
        }
        if let Some(v) = args.theta.or(file.theta) {
            protocol.theta = v;
        }
        if let Some(v) = args.budget.or(file.budget) {
            protocol.budget = v;
        }
        let solvers = match args.solvers.as_ref().or(file.solvers.as_ref()) {
            Some(names) => names.iter().map(|s| s.parse()).collect::<Result<_, _>>()?,
            None => Solver::ALL.to_vec(),
        };
        let problems = args
            .problems
            .clone()
            .or_else(|| file.problems.clone())
            .unwrap_or_else(|| newton_mr_core::problems::analytic_suite().iter().map(|p| p.name().to_string()).collect());
        Ok(Self {
            solvers,
            problems,
            seeds: args.seeds.clone().or_else(|| file.seeds.clone()).unwrap_or_else(|| vec![0, 1, 2]),
            protocol,
            out: args.out.clone().or_else(|| file.out.clone()).unwrap_or_else(|| PathBuf::from("bench-out")),
            traces: args.traces || file.traces.unwrap_or(false),
        })
    }
}
