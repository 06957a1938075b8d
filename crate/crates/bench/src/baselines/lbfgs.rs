use std::collections::VecDeque;

use newton_mr_core::linalg::all_finite;
use newton_mr_core::oracle::OracleCounter;
use newton_mr_core::{Problem, Vector};

use super::SolverRun;
use crate::protocol::Protocol;
use crate::record::RunStatus;
use crate::BenchError;

const C1: f64 = 1e-4;
const C2: f64 = 0.1;
const MAX_LS_EVALS: usize = 60;
const MAX_STEP: f64 = 1e10;
const CURVATURE_SKIP: f64 = 1e-14;
const ROUNDOFF: f64 = 10.0 * f64::EPSILON;

/// Limited-memory inverse Hessian approximation.
#[derive(Debug, Clone)]
pub struct LbfgsMemory {
    capacity: usize,
    pairs: VecDeque<(Vector, Vector, f64)>,
    accepted: usize,
    skipped: usize,
}

impl LbfgsMemory {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity >= 1, "L-BFGS memory must hold at least one pair");
        Self {
            capacity,
            pairs: VecDeque::with_capacity(capacity),
            accepted: 0,
            skipped: 0,
        }
    }

    /// Stores `(s, y)` unless `<s, y> <= 1e-14 ||s|| ||y||`. Returns whether
    /// the pair was kept.
    pub fn push_pair(&mut self, s: Vector, y: Vector) -> bool {
        let sy = s.dot(&y);
        if !(sy > CURVATURE_SKIP * s.norm() * y.norm()) {
            self.skipped += 1;
            return false;
        }
        if self.pairs.len() == self.capacity {
            self.pairs.pop_front();
        }
        self.pairs.push_back((s, y, 1.0 / sy));
        self.accepted += 1;
        true
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn accepted(&self) -> usize {
        self.accepted
    }

    pub fn skipped(&self) -> usize {
        self.skipped
    }

    pub fn clear(&mut self) {
        self.pairs.clear();
    }

    /// Two-loop recursion for `-H_k g`.
    pub fn direction(&self, g: &Vector) -> Vector {
        let mut q = g.clone();
        let mut alphas = Vec::with_capacity(self.pairs.len());
        for (s, y, rho) in self.pairs.iter().rev() {
            let a = rho * s.dot(&q);
            q.axpy(-a, y, 1.0);
            alphas.push(a);
        }
        if let Some((s, y, _)) = self.pairs.back() {
            q *= s.dot(y) / y.norm_squared();
        }
        for ((s, y, rho), a) in self.pairs.iter().zip(alphas.into_iter().rev()) {
            let b = rho * y.dot(&q);
            q.axpy(a - b, s, 1.0);
        }
        -q
    }
}

struct Trial {
    alpha: f64,
    f: f64,
    g: Vector,
    slope: f64,
}

struct Wolfe<'a> {
    problem: &'a dyn Problem,
    x: &'a Vector,
    d: &'a Vector,
    f0: f64,
    slope0: f64,
    min_step: f64,
    evals: usize,
}

impl Wolfe<'_> {
    fn eval(&mut self, alpha: f64, counter: &mut OracleCounter) -> Trial {
        self.evals += 1;
        let xt = self.x + self.d * alpha;
        counter.charge_value(1);
        counter.charge_gradient(1);
        let g = self.problem.gradient(&xt);
        Trial {
            alpha,
            f: self.problem.value(&xt),
            slope: g.dot(self.d),
            g,
        }
    }

    /// Armijo, or once `f` differences drop to rounding level, the
    /// approximate form that trades the value test for a slope test.
    fn sufficient(&self, t: &Trial) -> bool {
        t.f <= self.f0 + C1 * t.alpha * self.slope0
            || (t.f <= self.f0 + self.noise() && t.slope <= (2.0 * C1 - 1.0) * self.slope0)
    }

    fn noise(&self) -> f64 {
        ROUNDOFF * self.f0.abs()
    }

    fn curvature(&self, t: &Trial) -> bool {
        t.slope.abs() <= -C2 * self.slope0
    }

    fn search(&mut self, alpha0: f64, counter: &mut OracleCounter) -> Option<Trial> {
        let mut prev = Trial {
            alpha: 0.0,
            f: self.f0,
            g: Vector::zeros(0),
            slope: self.slope0,
        };
        let mut alpha = alpha0;
        let mut first = true;
        while self.evals < MAX_LS_EVALS {
            let t = self.eval(alpha, counter);
            if !t.f.is_finite() || !self.sufficient(&t) || (!first && t.f > prev.f + self.noise()) {
                return self.zoom(prev, t, counter);
            }
            if self.curvature(&t) {
                return Some(t);
            }
            if t.slope >= 0.0 {
                return self.zoom(t, prev, counter);
            }
            if alpha >= MAX_STEP {
                return None;
            }
            alpha = (2.0 * alpha).min(MAX_STEP);
            prev = t;
            first = false;
        }
        None
    }

    /// `lo` satisfies sufficient decrease with the lowest value seen; the
    /// minimizer lies between `lo` and `hi`.
    fn zoom(&mut self, mut lo: Trial, mut hi: Trial, counter: &mut OracleCounter) -> Option<Trial> {
        while self.evals < MAX_LS_EVALS {
            let (a, b) = (lo.alpha.min(hi.alpha), lo.alpha.max(hi.alpha));
            if b - a < self.min_step {
                return None;
            }
            let alpha = interpolate(&lo, &hi).clamp(a + 0.1 * (b - a), b - 0.1 * (b - a));
            let t = self.eval(alpha, counter);
            if !t.f.is_finite() || !self.sufficient(&t) || t.f > lo.f + self.noise() {
                hi = t;
            } else {
                if self.curvature(&t) {
                    return Some(t);
                }
                if t.slope * (hi.alpha - lo.alpha) >= 0.0 {
                    hi = lo;
                }
                lo = t;
            }
        }
        None
    }
}

/// Minimizer of the quadratic through `(lo.f, lo.slope)` and `hi.f`, or the
/// midpoint if that quadratic is not convex.
fn interpolate(lo: &Trial, hi: &Trial) -> f64 {
    let h = hi.alpha - lo.alpha;
    let curv = hi.f - lo.f - lo.slope * h;
    if hi.f.is_finite() && curv > 0.0 {
        lo.alpha - lo.slope * h * h / (2.0 * curv)
    } else {
        0.5 * (lo.alpha + hi.alpha)
    }
}

/// L-BFGS with a strong Wolfe line search (`c1 = 1e-4`, `c2 = 0.1`).
pub fn lbfgs(problem: &dyn Problem, x0: &Vector, protocol: &Protocol) -> Result<SolverRun, BenchError> {
    lbfgs_with_memory(problem, x0, protocol).map(|(run, _)| run)
}

fn lbfgs_with_memory(
    problem: &dyn Problem,
    x0: &Vector,
    protocol: &Protocol,
) -> Result<(SolverRun, LbfgsMemory), BenchError> {
    let mut memory = LbfgsMemory::new(protocol.lbfgs_memory);
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
        let gnorm = g.norm();
        if gnorm <= protocol.eps_g {
            break RunStatus::Converged;
        }
        if protocol.exhausted(&counter) {
            break RunStatus::BudgetExhausted;
        }
        let mut d = memory.direction(&g);
        let mut slope = g.dot(&d);
        if !(slope < 0.0) {
            memory.clear();
            d = -&g;
            slope = -gnorm * gnorm;
        }
        let alpha0 = if memory.is_empty() { (1.0 / gnorm).min(1.0) } else { 1.0 };
        let mut search = Wolfe {
            problem,
            x: &x,
            d: &d,
            f0: f,
            slope0: slope,
            min_step: protocol.min_step,
            evals: 0,
        };
        let Some(t) = search.search(alpha0, &mut counter) else {
            if memory.is_empty() {
                break RunStatus::LineSearchFailed;
            }
            memory.clear();
            continue;
        };
        let s = &d * t.alpha;
        let y = &t.g - &g;
        memory.push_pair(s.clone(), y);
        x += s;
        f = t.f;
        g = t.g;
        iterations += 1;
    };
    let run = SolverRun {
        grad_norm_final: g.norm(),
        x_final: x,
        f_final: f,
        status,
        iterations,
        oracle: counter,
    };
    Ok((run, memory))
}
