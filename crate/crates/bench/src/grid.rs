use std::collections::hash_map::DefaultHasher;
use std::fmt;
use std::fs::File;
use std::hash::{Hash, Hasher};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;

use newton_mr_core::newton_mr::{solve_first_order, solve_second_order, SolveResult, SolveStatus};
use newton_mr_core::problems::StartKind;
use newton_mr_core::{rng, Problem, Vector};

use crate::baselines::{lbfgs, steepest_descent, tr_steihaug, SolverRun};
use crate::protocol::Protocol;
use crate::record::{RunRecord, RunStatus};
use crate::BenchError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Solver {
    NewtonMrFirst,
    NewtonMrSecond,
    SteepestDescent,
    Lbfgs,
    TrSteihaug,
}

impl Solver {
    pub const ALL: [Solver; 5] = [
        Solver::NewtonMrFirst,
        Solver::NewtonMrSecond,
        Solver::SteepestDescent,
        Solver::Lbfgs,
        Solver::TrSteihaug,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Solver::NewtonMrFirst => "newton-mr-1st",
            Solver::NewtonMrSecond => "newton-mr-2nd",
            Solver::SteepestDescent => "sd",
            Solver::Lbfgs => "lbfgs",
            Solver::TrSteihaug => "tr-steihaug",
        }
    }
}

impl fmt::Display for Solver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Solver {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Solver::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| BenchError::Parse(format!("unknown solver {s:?}")))
    }
}

/// Starting point shared by every solver on `(problem, seed)`.
pub fn initial_point(problem: &dyn Problem, seed: u64) -> Vector {
    let mut r = rng::stream(seed, &format!("x0/{}", problem.name()));
    match problem.start_kind() {
        StartKind::StandardNormal => rng::normal_vector(&mut r, problem.dim()),
        StartKind::UnitSphere => rng::unit_sphere(&mut r, problem.dim()),
    }
}

pub fn fingerprint(x: &Vector) -> u64 {
    let mut h = DefaultHasher::new();
    for v in x.iter() {
        v.to_bits().hash(&mut h);
    }
    h.finish()
}

fn newton_run(res: SolveResult) -> SolverRun {
    let status = match res.status {
        SolveStatus::FirstOrderOptimal | SolveStatus::SecondOrderOptimal => RunStatus::Converged,
        SolveStatus::BudgetExhausted => RunStatus::BudgetExhausted,
        SolveStatus::LineSearchFailed => RunStatus::LineSearchFailed,
    };
    SolverRun {
        x_final: res.x_final,
        f_final: res.f_final,
        grad_norm_final: res.grad_norm_final,
        status,
        iterations: res.iterations,
        oracle: res.oracle,
    }
}

fn write_trace(res: &SolveResult, path: &Path) -> Result<(), BenchError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(File::create(path)?);
    for rec in &res.trace {
        w.serialize(rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Runs one solver from `x0`. Newton-MR traces go to `trace_dir` when given.
pub fn run_solver(
    solver: Solver,
    problem: &dyn Problem,
    x0: &Vector,
    seed: u64,
    protocol: &Protocol,
    trace_dir: Option<&Path>,
) -> Result<(SolverRun, Option<PathBuf>), BenchError> {
    let newton = match solver {
        Solver::NewtonMrFirst => solve_first_order(problem, x0, &protocol.first_order())?,
        Solver::NewtonMrSecond => solve_second_order(problem, x0, &protocol.second_order(seed))?,
        Solver::SteepestDescent => return Ok((steepest_descent(problem, x0, protocol)?, None)),
        Solver::Lbfgs => return Ok((lbfgs(problem, x0, protocol)?, None)),
        Solver::TrSteihaug => return Ok((tr_steihaug(problem, x0, protocol)?, None)),
    };
    let path = match trace_dir {
        Some(dir) => {
            let p = dir.join(format!("trace_{}_{}_{}.csv", solver, problem.name(), seed));
            write_trace(&newton, &p)?;
            Some(p)
        }
        None => None,
    };
    Ok((newton_run(newton), path))
}

/// A grid cell's record together with the fingerprint of its start point.
#[derive(Debug, Clone)]
pub struct GridCell {
    pub record: RunRecord,
    pub x0_fingerprint: u64,
}

fn run_cell(solver: Solver, problem: &dyn Problem, seed: u64, protocol: &Protocol, trace_dir: Option<&Path>) -> GridCell {
    let x0 = initial_point(problem, seed);
    let start = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(|| run_solver(solver, problem, &x0, seed, protocol, trace_dir)));
    let wall_time_s = start.elapsed().as_secs_f64();
    let record = match outcome {
        Ok(Ok((run, trace_path))) => RunRecord {
            solver: solver.to_string(),
            problem: problem.name().to_string(),
            seed,
            status: run.status,
            iterations: run.iterations,
            f_final: run.f_final,
            grad_norm_final: run.grad_norm_final,
            oracle_total: run.oracle.total(),
            wall_time_s,
            trace_path,
        },
        _ => RunRecord {
            solver: solver.to_string(),
            problem: problem.name().to_string(),
            seed,
            status: RunStatus::Error,
            iterations: 0,
            f_final: f64::NAN,
            grad_norm_final: f64::NAN,
            oracle_total: f64::NAN,
            wall_time_s,
            trace_path: None,
        },
    };
    GridCell {
        record,
        x0_fingerprint: fingerprint(&x0),
    }
}

/// Every `(solver, problem, seed)` triple, in that nesting order, run in
/// parallel. Failures are reported in the record status.
pub fn run_grid_detailed(
    solvers: &[Solver],
    problems: &[Arc<dyn Problem>],
    seeds: &[u64],
    protocol: &Protocol,
    trace_dir: Option<&Path>,
) -> Vec<GridCell> {
    let cells: Vec<(Solver, &Arc<dyn Problem>, u64)> = solvers
        .iter()
        .flat_map(|&s| problems.iter().flat_map(move |p| seeds.iter().map(move |&seed| (s, p, seed))))
        .collect();
    cells
        .into_par_iter()
        .map(|(s, p, seed)| run_cell(s, p.as_ref(), seed, protocol, trace_dir))
        .collect()
}

pub fn run_grid(solvers: &[Solver], problems: &[Arc<dyn Problem>], seeds: &[u64], protocol: &Protocol) -> Vec<RunRecord> {
    run_grid_detailed(solvers, problems, seeds, protocol, None)
        .into_iter()
        .map(|c| c.record)
        .collect()
}
