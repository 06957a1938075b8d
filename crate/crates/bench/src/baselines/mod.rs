//! Reference solvers run under the same protocol as Newton-MR.

mod lbfgs;
mod sd;
mod tr;

pub use lbfgs::{lbfgs, LbfgsMemory};
pub use sd::steepest_descent;
pub use tr::{steihaug_cg, tr_steihaug, SteihaugExit, SteihaugStep};

use newton_mr_core::oracle::OracleCounter;
use newton_mr_core::Vector;

use crate::record::RunStatus;

/// Final state of one solver run.
#[derive(Debug, Clone)]
pub struct SolverRun {
    pub x_final: Vector,
    pub f_final: f64,
    pub grad_norm_final: f64,
    pub status: RunStatus,
    pub iterations: usize,
    pub oracle: OracleCounter,
}
