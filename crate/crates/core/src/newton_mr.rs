//! Newton-MR outer iterations.
//!
//! Each iteration asks MINRES for either an inexact Newton step or a
//! direction of nonpositive curvature and picks the step size with the
//! matching line search. The second-order variant additionally probes for
//! negative curvature with a random right-hand side whenever the gradient is
//! small, and only stops once that probe certifies `H + (eps_h/2) I` is
//! positive definite on the explored Krylov space.

use std::time::Instant;

use rand::Rng;
use serde::Serialize;

use crate::error::CoreError;
use crate::linalg::{all_finite, sign_nonneg, SymmetricOperator, Vector};
use crate::linesearch::{backtrack, forward_backward, Decrease, LineSearchConfig};
use crate::minres::{residual_curvature, run_minres, DirectionType, MinresConfig};
use crate::oracle::{OracleCounter, OracleWeights};
use crate::problems::Problem;
use crate::rng;

/// How the inner tolerance is derived from `theta`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum InexactnessRule {
    /// `eta = theta * sqrt(eps_g)`.
    Scaled,
    /// `eta = theta`.
    Fixed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FirstOrderConfig {
    pub eps_g: f64,
    pub theta: f64,
    pub inexactness: InexactnessRule,
    /// Armijo parameter for solution directions, in `(0, 1/2)`.
    pub rho_sol: f64,
    /// Armijo parameter for curvature directions, in `(0, 1)`.
    pub rho_npc: f64,
    pub ls: LineSearchConfig,
    pub minres: MinresConfig,
    pub max_outer_iters: usize,
    /// Stop once the weighted oracle total exceeds this.
    pub oracle_budget: f64,
    pub weights: OracleWeights,
    /// Keep `x_k` and `d_k` in the trace.
    pub record_iterates: bool,
}

impl Default for FirstOrderConfig {
    fn default() -> Self {
        Self {
            eps_g: 1e-8,
            theta: 0.1,
            inexactness: InexactnessRule::Scaled,
            rho_sol: 1e-4,
            rho_npc: 1e-4,
            ls: LineSearchConfig::default(),
            minres: MinresConfig::default(),
            max_outer_iters: 100_000,
            oracle_budget: 1e5,
            weights: OracleWeights::default(),
            record_iterates: false,
        }
    }
}

impl FirstOrderConfig {
    pub fn eta(&self) -> f64 {
        match self.inexactness {
            InexactnessRule::Scaled => self.theta * self.eps_g.sqrt(),
            InexactnessRule::Fixed => self.theta,
        }
    }

    pub fn validate(&self) -> Result<(), CoreError> {
        let bad = |m: String| Err(CoreError::InvalidConfig(m));
        if !(self.eps_g > 0.0 && self.eps_g <= 1.0) {
            return bad(format!("eps_g must lie in (0, 1], got {}", self.eps_g));
        }
        if !(self.theta > 0.0) {
            return bad(format!("theta must be positive, got {}", self.theta));
        }
        if !(self.rho_sol > 0.0 && self.rho_sol < 0.5) {
            return bad(format!("rho_sol must lie in (0, 1/2), got {}", self.rho_sol));
        }
        if !(self.rho_npc > 0.0 && self.rho_npc < 1.0) {
            return bad(format!("rho_npc must lie in (0, 1), got {}", self.rho_npc));
        }
        if self.max_outer_iters == 0 || !(self.oracle_budget > 0.0) {
            return bad("max_outer_iters and oracle_budget must be positive".into());
        }
        self.ls.validate()?;
        self.minres.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SecondOrderConfig {
    pub first: FirstOrderConfig,
    pub eps_h: f64,
    pub rng_seed: u64,
}

impl Default for SecondOrderConfig {
    fn default() -> Self {
        Self {
            first: FirstOrderConfig::default(),
            eps_h: 0.1,
            rng_seed: 0,
        }
    }
}

impl SecondOrderConfig {
    pub fn validate(&self) -> Result<(), CoreError> {
        if !(self.eps_h > 0.0 && self.eps_h <= 1.0) {
            return Err(CoreError::InvalidConfig(format!("eps_h must lie in (0, 1], got {}", self.eps_h)));
        }
        self.first.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum StepKind {
    Sol,
    Npc,
    /// Step along a direction found by the random curvature probe.
    ProbeNpc,
    /// Probe found no curvature below `-eps_h/2`; no step taken.
    Certified,
    /// Final record without a step.
    Stop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SolveStatus {
    FirstOrderOptimal,
    SecondOrderOptimal,
    BudgetExhausted,
    LineSearchFailed,
}

impl SolveStatus {
    pub fn converged(self) -> bool {
        matches!(self, SolveStatus::FirstOrderOptimal | SolveStatus::SecondOrderOptimal)
    }
}

/// One outer iteration as seen from `x_k`.
#[derive(Debug, Clone, Serialize)]
pub struct IterationRecord {
    pub k: usize,
    pub f: f64,
    pub grad_norm: f64,
    pub kind: StepKind,
    pub inner_iters: usize,
    pub alpha: f64,
    pub step_norm: f64,
    /// `<g_k, d_k>` for Newton-type steps, `<d_k, H_k d_k>` for probe steps.
    pub model_term: f64,
    /// Armijo parameter the step was accepted under.
    pub rho: f64,
    pub f_next: f64,
    pub oracle_total: f64,
    pub wall_time_s: f64,
    #[serde(skip)]
    pub x: Option<Vector>,
    #[serde(skip)]
    pub direction: Option<Vector>,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub x_final: Vector,
    pub f_final: f64,
    pub grad_norm_final: f64,
    pub status: SolveStatus,
    pub iterations: usize,
    pub oracle: OracleCounter,
    pub trace: Vec<IterationRecord>,
}

/// Unit direction of curvature at most `-eps_h / 2` under `H`.
#[derive(Debug, Clone)]
pub struct ProbeDirection {
    pub direction: Vector,
    /// `<d, H d>`, read off the recurrence.
    pub curvature: f64,
    pub inner_iters: usize,
}

/// Outcome of one probe together with its operator cost.
#[derive(Debug, Clone)]
pub struct ProbeOutcome {
    pub found: Option<ProbeDirection>,
    pub operator_applications: usize,
}

/// Runs MINRES with a random unit right-hand side on `H + (eps_h/2) I` and
/// turns a detected curvature direction into a unit descent-oriented step.
pub fn negative_curvature_probe<R: Rng + ?Sized>(
    h: &SymmetricOperator,
    g: &Vector,
    eps_h: f64,
    rng: &mut R,
    minres_cfg: &MinresConfig,
) -> Result<ProbeOutcome, CoreError> {
    if !(eps_h > 0.0) {
        return Err(CoreError::InvalidConfig(format!("eps_h must be positive, got {eps_h}")));
    }
    let shift = 0.5 * eps_h;
    let shifted = h.shift(shift);
    let rhs = rng::unit_sphere(rng, h.dim());
    let cfg = MinresConfig {
        eta: 0.0,
        disable_sol_test: false,
        disable_npc_test: false,
        ..minres_cfg.clone()
    };
    let res = run_minres(&shifted, &rhs, &cfg)?;
    let found = match res.d_type {
        DirectionType::Npc => {
            let r = &res.direction;
            let d = r.unscale(r.norm()) * -sign_nonneg(g.dot(r));
            let last = res.trace.last().expect("MINRES records every iteration");
            Some(ProbeDirection {
                direction: d,
                curvature: residual_curvature(last.cos, last.gamma1, shift),
                inner_iters: res.iters,
            })
        }
        DirectionType::Sol => None,
    };
    Ok(ProbeOutcome {
        found,
        operator_applications: res.operator_applications,
    })
}

pub fn solve_first_order(problem: &dyn Problem, x0: &Vector, cfg: &FirstOrderConfig) -> Result<SolveResult, CoreError> {
    cfg.validate()?;
    Solver::new(problem, x0, cfg)?.run::<rand_chacha::ChaCha8Rng>(None)
}

pub fn solve_second_order(problem: &dyn Problem, x0: &Vector, cfg: &SecondOrderConfig) -> Result<SolveResult, CoreError> {
    cfg.validate()?;
    let mut r = rng::stream(cfg.rng_seed, "curvature-probe");
    Solver::new(problem, x0, &cfg.first)?.run(Some((cfg.eps_h, &mut r)))
}

struct Solver<'a> {
    problem: &'a dyn Problem,
    cfg: &'a FirstOrderConfig,
    x: Vector,
    f: f64,
    g: Vector,
    counter: OracleCounter,
    trace: Vec<IterationRecord>,
    start: Instant,
}

struct Step {
    kind: StepKind,
    direction: Vector,
    inner_iters: usize,
    decrease: Decrease,
    forward: bool,
}

impl<'a> Solver<'a> {
    fn new(problem: &'a dyn Problem, x0: &Vector, cfg: &'a FirstOrderConfig) -> Result<Self, CoreError> {
        if x0.len() != problem.dim() {
            return Err(CoreError::DimensionMismatch {
                expected: problem.dim(),
                found: x0.len(),
            });
        }
        let start = Instant::now();
        let mut counter = OracleCounter::new(cfg.weights);
        let f = problem.value(x0);
        let g = problem.gradient(x0);
        counter.charge_value(1);
        counter.charge_gradient(1);
        if !f.is_finite() {
            return Err(CoreError::NonFinite("objective"));
        }
        if !all_finite(&g) {
            return Err(CoreError::NonFinite("gradient"));
        }
        Ok(Self {
            problem,
            cfg,
            x: x0.clone(),
            f,
            g,
            counter,
            trace: Vec::new(),
            start,
        })
    }

    fn run<R: Rng + ?Sized>(mut self, mut probe: Option<(f64, &mut R)>) -> Result<SolveResult, CoreError> {
        let cfg = self.cfg;
        let eta = cfg.eta();
        let minres_cfg = MinresConfig {
            eta,
            ..cfg.minres.clone()
        };
        let mut k = 0;
        let status = loop {
            let gnorm = self.g.norm();
            let small_gradient = gnorm <= cfg.eps_g;
            if small_gradient && probe.is_none() {
                break SolveStatus::FirstOrderOptimal;
            }
            if self.counter.total() > cfg.oracle_budget || k >= cfg.max_outer_iters {
                break SolveStatus::BudgetExhausted;
            }

            let hess = self.problem.hessian_at(&self.x);
            let step = if small_gradient {
                let (eps_h, rng) = probe.as_mut().expect("probe configured");
                let outcome = negative_curvature_probe(&hess, &self.g, *eps_h, &mut **rng, &cfg.minres)?;
                self.counter.charge_hessian_vector(outcome.operator_applications);
                match outcome.found {
                    None => {
                        self.record(k, StepKind::Certified, 0, 0.0, None, 0.0, 0.0, self.f);
                        break SolveStatus::SecondOrderOptimal;
                    }
                    Some(p) => Step {
                        kind: StepKind::ProbeNpc,
                        inner_iters: p.inner_iters,
                        decrease: Decrease::Curvature {
                            f_x: self.f,
                            dhd: p.curvature,
                            rho: cfg.rho_npc,
                        },
                        direction: p.direction,
                        forward: true,
                    },
                }
            } else {
                let res = run_minres(&hess, &self.g, &minres_cfg)?;
                self.counter.charge_hessian_vector(res.operator_applications);
                let slope = self.g.dot(&res.direction);
                let (kind, rho, forward) = match res.d_type {
                    DirectionType::Sol => (StepKind::Sol, cfg.rho_sol, false),
                    DirectionType::Npc => (StepKind::Npc, cfg.rho_npc, true),
                };
                Step {
                    kind,
                    inner_iters: res.iters,
                    decrease: Decrease::Armijo { f_x: self.f, slope, rho },
                    direction: res.direction,
                    forward,
                }
            };

            if step.direction.norm() == 0.0 {
                break SolveStatus::LineSearchFailed;
            }
            let problem = self.problem;
            let x = &self.x;
            let d = &step.direction;
            let counter = &mut self.counter;
            let evaluate = |alpha: f64| {
                counter.charge_value(1);
                problem.value(&(x + d * alpha))
            };
            let outcome = if step.forward {
                forward_backward(evaluate, &step.decrease, &cfg.ls)
            } else {
                backtrack(evaluate, &step.decrease, &cfg.ls)
            };
            if !outcome.accepted() {
                self.record(k, StepKind::Stop, step.inner_iters, outcome.alpha, Some(&step), 0.0, 0.0, self.f);
                break SolveStatus::LineSearchFailed;
            }

            let (model_term, rho) = match step.decrease {
                Decrease::Armijo { slope, rho, .. } => (slope, rho),
                Decrease::Curvature { dhd, rho, .. } => (dhd, rho),
            };
            self.record(k, step.kind, step.inner_iters, outcome.alpha, Some(&step), model_term, rho, outcome.f_new);
            self.x.axpy(outcome.alpha, &step.direction, 1.0);
            self.f = outcome.f_new;
            self.g = self.problem.gradient(&self.x);
            self.counter.charge_gradient(1);
            if !all_finite(&self.g) {
                return Err(CoreError::NonFinite("gradient"));
            }
            k += 1;
        };

        if status != SolveStatus::SecondOrderOptimal && !matches!(self.trace.last(), Some(r) if r.kind == StepKind::Stop) {
            self.record(k, StepKind::Stop, 0, 0.0, None, 0.0, 0.0, self.f);
        }
        Ok(SolveResult {
            grad_norm_final: self.g.norm(),
            f_final: self.f,
            x_final: self.x,
            status,
            iterations: k,
            oracle: self.counter,
            trace: self.trace,
        })
    }

    #[allow(clippy::too_many_arguments)]
    fn record(
        &mut self,
        k: usize,
        kind: StepKind,
        inner_iters: usize,
        alpha: f64,
        step: Option<&Step>,
        model_term: f64,
        rho: f64,
        f_next: f64,
    ) {
        let keep = self.cfg.record_iterates;
        self.trace.push(IterationRecord {
            k,
            f: self.f,
            grad_norm: self.g.norm(),
            kind,
            inner_iters,
            alpha,
            step_norm: step.map_or(0.0, |s| alpha * s.direction.norm()),
            model_term,
            rho,
            f_next,
            oracle_total: self.counter.total(),
            wall_time_s: self.start.elapsed().as_secs_f64(),
            x: keep.then(|| self.x.clone()),
            direction: if keep { step.map(|s| s.direction.clone()) } else { None },
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DenseSymmetricMatrix;
    use crate::problems::{ConvexQuadratic, QuarticSaddle};
    use nalgebra::DMatrix;

    #[test]
    fn starting_at_stationary_point_returns_immediately() {
        let p = QuarticSaddle::new(2);
        let x0 = Vector::zeros(2);
        let res = solve_first_order(&p, &x0, &FirstOrderConfig::default()).unwrap();
        assert_eq!(res.status, SolveStatus::FirstOrderOptimal);
        assert_eq!(res.x_final, x0);
        assert_eq!(res.iterations, 0);
        assert_eq!(res.oracle.hv_evals, 0);
    }

    #[test]
    fn convex_quadratic_takes_solution_steps() {
        let p = ConvexQuadratic::new(10, 100.0, 3);
        let cfg = FirstOrderConfig {
            eps_g: 1e-10,
            ..FirstOrderConfig::default()
        };
        let x0 = Vector::from_element(10, 1.0);
        let res = solve_first_order(&p, &x0, &cfg).unwrap();
        assert_eq!(res.status, SolveStatus::FirstOrderOptimal);
        assert!(res.iterations <= 15);
        assert!(res.trace.iter().filter(|r| r.kind != StepKind::Stop).all(|r| r.kind == StepKind::Sol));
        let a = p.hessian_at(&x0).to_dense();
        let b = -p.gradient(&Vector::zeros(10));
        let sol = a.lu().solve(&b).unwrap();
        assert!((&res.x_final - &sol).norm() <= 1e-6 * sol.norm());
    }

    #[test]
    fn quartic_saddle_converges_from_offset_start() {
        let p = QuarticSaddle::new(2);
        let cfg = FirstOrderConfig {
            eps_g: 1e-10,
            ..FirstOrderConfig::default()
        };
        let res = solve_first_order(&p, &Vector::from_vec(vec![0.1, 1.0]), &cfg).unwrap();
        assert_eq!(res.status, SolveStatus::FirstOrderOptimal);
        assert!(res.grad_norm_final <= 1e-10);
        assert!((res.f_final + 0.25).abs() < 1e-12);
        assert!((res.x_final[0].abs() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn probe_finds_curvature_on_indefinite_operator() {
        let h = SymmetricOperator::from_matrix(DMatrix::from_diagonal(&Vector::from_vec(vec![-1.0, 1.0]))).unwrap();
        let g = Vector::from_vec(vec![0.3, -0.2]);
        for seed in 0..10 {
            let mut r = rng::stream(seed, "probe-test");
            let out = negative_curvature_probe(&h, &g, 0.5, &mut r, &MinresConfig::default()).unwrap();
            let p = out.found.expect("indefinite operator must expose curvature");
            assert!((p.direction.norm() - 1.0).abs() < 1e-14);
            let dense = p.direction.dot(&h.apply(&p.direction));
            assert!(dense <= -0.25 + 1e-12);
            assert!((dense - p.curvature).abs() < 1e-10);
            assert!(g.dot(&p.direction) <= 0.0);
        }
    }

    #[test]
    fn probe_certifies_positive_definite_operators() {
        for seed in 0..10 {
            let mut r = rng::stream(seed, "probe-test");
            let id = SymmetricOperator::identity(4);
            assert!(negative_curvature_probe(&id, &Vector::zeros(4), 0.1, &mut r, &MinresConfig::default())
                .unwrap()
                .found
                .is_none());
            let zero = SymmetricOperator::zero(3);
            assert!(negative_curvature_probe(&zero, &Vector::zeros(3), 1.0, &mut r, &MinresConfig::default())
                .unwrap()
                .found
                .is_none());
        }
    }

    #[test]
    fn probe_tolerates_mild_negative_curvature() {
        // lambda_min = -0.4 but H + 0.5 I is positive definite
        let m = DenseSymmetricMatrix::from_diagonal(&[-0.4, 0.5, 2.0, 3.0]);
        let mut r = rng::stream(1, "probe-test");
        let out = negative_curvature_probe(&m.to_operator(), &Vector::zeros(4), 1.0, &mut r, &MinresConfig::default()).unwrap();
        assert!(out.found.is_none());
    }

    #[test]
    fn second_order_escapes_exact_saddle() {
        let p = QuarticSaddle::new(2);
        for seed in 0..10 {
            let cfg = SecondOrderConfig {
                rng_seed: seed,
                ..SecondOrderConfig::default()
            };
            let res = solve_second_order(&p, &Vector::zeros(2), &cfg).unwrap();
            assert_eq!(res.status, SolveStatus::SecondOrderOptimal);
            assert!((res.f_final + 0.25).abs() < 1e-6);
            assert!(res.trace.iter().any(|r| r.kind == StepKind::ProbeNpc));
            assert_eq!(res.trace.last().unwrap().kind, StepKind::Certified);
        }
    }

    #[test]
    fn second_order_on_convex_quadratic_probes_once() {
        let p = ConvexQuadratic::new(10, 100.0, 3);
        let res = solve_second_order(&p, &Vector::from_element(10, 1.0), &SecondOrderConfig::default()).unwrap();
        assert_eq!(res.status, SolveStatus::SecondOrderOptimal);
        let probes = res.trace.iter().filter(|r| matches!(r.kind, StepKind::ProbeNpc | StepKind::Certified)).count();
        assert_eq!(probes, 1);
    }

    #[test]
    fn budget_is_enforced() {
        let p = crate::problems::Rosenbrock::new(10);
        let cfg = FirstOrderConfig {
            oracle_budget: 50.0,
            ..FirstOrderConfig::default()
        };
        let res = solve_first_order(&p, &Vector::zeros(10), &cfg).unwrap();
        assert_eq!(res.status, SolveStatus::BudgetExhausted);
    }

    #[test]
    fn rejects_invalid_config() {
        let p = QuarticSaddle::new(2);
        let cfg = FirstOrderConfig {
            rho_sol: 0.6,
            ..FirstOrderConfig::default()
        };
        assert!(solve_first_order(&p, &Vector::zeros(2), &cfg).is_err());
        let cfg = SecondOrderConfig {
            eps_h: 0.0,
            ..SecondOrderConfig::default()
        };
        assert!(solve_second_order(&p, &Vector::zeros(2), &cfg).is_err());
        assert!(solve_first_order(&p, &Vector::zeros(3), &FirstOrderConfig::default()).is_err());
    }

    #[test]
    fn scaled_and_fixed_inexactness() {
        let cfg = FirstOrderConfig {
            eps_g: 1e-4,
            theta: 0.1,
            ..FirstOrderConfig::default()
        };
        assert!((cfg.eta() - 1e-3).abs() < 1e-18);
        let fixed = FirstOrderConfig {
            inexactness: InexactnessRule::Fixed,
            ..cfg
        };
        assert_eq!(fixed.eta(), 0.1);
    }
}
