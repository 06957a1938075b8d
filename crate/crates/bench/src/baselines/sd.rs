use newton_mr_core::linesearch::{backtrack, Decrease};
use newton_mr_core::linalg::all_finite;
use newton_mr_core::{Problem, Vector};

use super::SolverRun;
use crate::protocol::Protocol;
use crate::record::RunStatus;
use crate::BenchError;

/// Gradient descent with Armijo backtracking from a unit step.
pub fn steepest_descent(problem: &dyn Problem, x0: &Vector, protocol: &Protocol) -> Result<SolverRun, BenchError> {
    let ls = protocol.armijo(1e-4);
    let mut counter = protocol.counter();
    let mut x = x0.clone();
    let mut f = problem.value(&x);
    let mut g = problem.gradient(&x);
    counter.charge_value(1);
    counter.charge_gradient(1);
    let mut iterations = 0;
    let status = loop {
        if !f.is_finite() || !all_finite(&g) {
            return Err(BenchError::NonFinite);
        }
        if g.norm() <= protocol.eps_g {
            break RunStatus::Converged;
        }
        if protocol.exhausted(&counter) {
            break RunStatus::BudgetExhausted;
        }
        let d = -&g;
        let decrease = Decrease::Armijo {
            f_x: f,
            slope: -g.norm_squared(),
            rho: ls.rho,
        };
        let out = backtrack(
            |a| {
                counter.charge_value(1);
                problem.value(&(&x + &d * a))
            },
            &decrease,
            &ls,
        );
        if !out.accepted() {
            break RunStatus::LineSearchFailed;
        }
        x.axpy(out.alpha, &d, 1.0);
        f = out.f_new;
        g = problem.gradient(&x);
        counter.charge_gradient(1);
        iterations += 1;
    };
    Ok(SolverRun {
        grad_norm_final: g.norm(),
        x_final: x,
        f_final: f,
        status,
        iterations,
        oracle: counter,
    })
}
