//! MINRES over `K_t(H, g)` for `H s = -g`, with two built-in exits.
//!
//! * the inexactness test fires once `||H r|| <= eta ||H s||`, returning the
//!   current iterate as a solution direction;
//! * the curvature test fires once the residual `r_{t-1}` has nonpositive
//!   curvature, which is read off the sign of `c_{t-1} gamma1_t`.
//!
//! Both tests reuse scalars the recurrences already produce, so each
//! iteration costs exactly one operator application. [`MinresIteration`]
//! exposes the solver one step at a time for diagnostics; [`run_minres`]
//! drives it to completion.

use serde::Serialize;

use crate::error::CoreError;
use crate::linalg::{all_finite, SymmetricOperator, Vector};

#[derive(Debug, Clone, PartialEq)]
pub struct MinresConfig {
    /// Inexactness tolerance. Zero means "exact solutions only".
    pub eta: f64,
    pub max_iters: usize,
    /// `beta_{t+1}` below this multiple of the running operator-norm
    /// estimate counts as Krylov exhaustion.
    pub beta_zero_tol: f64,
    pub disable_sol_test: bool,
    pub disable_npc_test: bool,
    pub full_reorthogonalize: bool,
}

impl Default for MinresConfig {
    fn default() -> Self {
        Self {
            eta: 0.1,
            max_iters: 1000,
            beta_zero_tol: 1e-12,
            disable_sol_test: false,
            disable_npc_test: false,
            full_reorthogonalize: false,
        }
    }
}

impl MinresConfig {
    pub fn with_eta(eta: f64) -> Self {
        Self {
            eta,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), CoreError> {
        if self.max_iters == 0 {
            return Err(CoreError::InvalidConfig("max_iters must be at least 1".into()));
        }
        if !(self.eta >= 0.0) || !self.eta.is_finite() {
            return Err(CoreError::InvalidConfig(format!("eta must be finite and >= 0, got {}", self.eta)));
        }
        if !(self.beta_zero_tol >= 0.0) {
            return Err(CoreError::InvalidConfig("beta_zero_tol must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DirectionType {
    /// Approximate solution of `H s = -g`.
    #[serde(rename = "SOL")]
    Sol,
    /// Direction with nonpositive curvature.
    #[serde(rename = "NPC")]
    Npc,
}

impl DirectionType {
    pub fn as_str(self) -> &'static str {
        match self {
            DirectionType::Sol => "SOL",
            DirectionType::Npc => "NPC",
        }
    }
}

/// Why the iteration stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Termination {
    SolTest,
    NpcTest,
    /// Lanczos broke down with a nonzero residual; the last iterate is
    /// returned as a forced solution.
    KrylovExhausted,
    MaxIters,
}

impl Termination {
    pub fn is_forced(self) -> bool {
        matches!(self, Termination::KrylovExhausted | Termination::MaxIters)
    }
}

/// Diagnostics recorded at iteration `t`.
///
/// The residual quantities describe the pair `(s_{t-1}, r_{t-1})` examined
/// by the two tests at that iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceEntry {
    pub t: usize,
    /// Lanczos diagonal entry `v_t^T H v_t`.
    pub alpha: f64,
    /// Lanczos off-diagonal `beta_{t+1}` after breakdown snapping.
    pub beta_next: f64,
    pub gamma1: f64,
    /// Zero when the iteration returned before the rotation was formed.
    pub gamma2: f64,
    pub delta1_next: f64,
    pub cos: f64,
    pub sin: f64,
    /// `||r_{t-1}||`.
    pub residual_norm: f64,
    /// `<r_{t-1}, H r_{t-1}> / ||r_{t-1}||^2`.
    pub curvature: f64,
    /// `||H s_{t-1}||` from the recurrence.
    pub hs_norm: f64,
    /// `||H r_{t-1}||` from the recurrence.
    pub hr_norm: f64,
}

#[derive(Debug, Clone)]
pub struct MinresResult {
    pub direction: Vector,
    pub d_type: DirectionType,
    /// Iteration index `t` at return. The direction is `s_{t-1}` or
    /// `r_{t-1}`.
    pub iters: usize,
    pub termination: Termination,
    /// Curvature `-c_{t-1} gamma1_t` of the returned residual direction.
    pub residual_curvature: f64,
    /// Norm of the residual associated with the returned direction.
    pub residual_norm: f64,
    pub operator_applications: usize,
    pub trace: Vec<TraceEntry>,
}

pub fn sol_test(phi_prev: f64, gamma1: f64, delta1_next: f64, phi0: f64, eta: f64) -> bool {
    let hr = phi_prev * gamma1.hypot(delta1_next);
    let hs = (phi0 * phi0 - phi_prev * phi_prev).max(0.0).sqrt();
    hr <= eta * hs
}

pub fn npc_test(c_prev: f64, gamma1: f64) -> bool {
    c_prev * gamma1 >= 0.0
}

/// Curvature of the unit residual direction under `H` when the solver ran
/// on `H + shift I`.
pub fn residual_curvature(c_prev: f64, gamma1: f64, shift: f64) -> f64 {
    -c_prev * gamma1 - shift
}

/// Runs MINRES on `H s = -g` until one of its exits fires.
pub fn run_minres(
    op: &SymmetricOperator,
    g: &Vector,
    cfg: &MinresConfig,
) -> Result<MinresResult, CoreError> {
    let mut it = MinresIteration::new(op, g, cfg.clone())?;
    loop {
        if let Some(result) = it.step()? {
            return Ok(result);
        }
    }
}

/// Step-by-step MINRES state.
pub struct MinresIteration<'a> {
    op: &'a SymmetricOperator,
    cfg: MinresConfig,
    applications_at_start: usize,
    t: usize,
    phi0: f64,
    phi: f64,
    beta: f64,
    c: f64,
    s: f64,
    delta1: f64,
    eps: f64,
    op_norm: f64,
    v_prev: Vector,
    v: Vector,
    w_prev: Vector,
    w_prev2: Vector,
    iterate: Vector,
    residual: Vector,
    basis: Vec<Vector>,
    trace: Vec<TraceEntry>,
    finished: bool,
}

impl<'a> MinresIteration<'a> {
    pub fn new(op: &'a SymmetricOperator, g: &Vector, cfg: MinresConfig) -> Result<Self, CoreError> {
        cfg.validate()?;
        if g.len() != op.dim() {
            return Err(CoreError::DimensionMismatch {
                expected: op.dim(),
                found: g.len(),
            });
        }
        if !all_finite(g) {
            return Err(CoreError::NonFinite("right-hand side"));
        }
        let phi0 = g.norm();
        if phi0 == 0.0 {
            return Err(CoreError::InvalidConfig("zero right-hand side".into()));
        }
        let dim = op.dim();
        let residual = -g;
        let v = residual.unscale(phi0);
        let basis = if cfg.full_reorthogonalize {
            vec![v.clone()]
        } else {
            Vec::new()
        };
        Ok(Self {
            op,
            applications_at_start: op.apply_count(),
            t: 0,
            phi0,
            phi: phi0,
            beta: 0.0,
            c: -1.0,
            s: 0.0,
            delta1: 0.0,
            eps: 0.0,
            op_norm: 0.0,
            v_prev: Vector::zeros(dim),
            v,
            w_prev: Vector::zeros(dim),
            w_prev2: Vector::zeros(dim),
            iterate: Vector::zeros(dim),
            residual,
            basis,
            trace: Vec::new(),
            finished: false,
            cfg,
        })
    }

    /// Index of the last completed iteration. After `t` completed steps the
    /// iterate is `s_t`.
    pub fn t(&self) -> usize {
        self.t
    }

    pub fn iterate(&self) -> &Vector {
        &self.iterate
    }

    pub fn residual(&self) -> &Vector {
        &self.residual
    }

    /// Current `phi_t`, the recurrence value of `||r_t||`.
    pub fn residual_norm(&self) -> f64 {
        self.phi
    }

    pub fn rhs_norm(&self) -> f64 {
        self.phi0
    }

    pub fn trace(&self) -> &[TraceEntry] {
        &self.trace
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    /// Performs iteration `t + 1`. Returns the result once an exit fires.
    pub fn step(&mut self) -> Result<Option<MinresResult>, CoreError> {
        if self.finished {
            return Err(CoreError::InvalidConfig("MINRES iteration already terminated".into()));
        }
        let t = self.t + 1;

        // Lanczos
        let mut q = self.op.apply(&self.v);
        let alpha = self.v.dot(&q);
        q.axpy(-self.beta, &self.v_prev, 1.0);
        q.axpy(-alpha, &self.v, 1.0);
        if self.cfg.full_reorthogonalize {
            for _ in 0..2 {
                for b in &self.basis {
                    let proj = b.dot(&q);
                    q.axpy(-proj, b, 1.0);
                }
            }
        }
        let mut beta_next = q.norm();
        if !alpha.is_finite() || !beta_next.is_finite() {
            self.finished = true;
            return Err(CoreError::NumericalBreakdown(format!(
                "non-finite Lanczos coefficient at iteration {t}"
            )));
        }
        self.op_norm = self
            .op_norm
            .max((alpha * alpha + self.beta * self.beta + beta_next * beta_next).sqrt());
        let exhausted = beta_next <= self.cfg.beta_zero_tol * self.op_norm;
        if exhausted {
            beta_next = 0.0;
        }

        // 2x2 reflection applied to the new tridiagonal column
        let (c_prev, s_prev) = (self.c, self.s);
        let delta2 = c_prev * self.delta1 + s_prev * alpha;
        let eps_next = s_prev * beta_next;
        let mut gamma1 = s_prev * self.delta1 - c_prev * alpha;
        let delta1_next = -c_prev * beta_next;
        // at exhaustion, residual curvature below the breakdown floor is zero
        if exhausted && (c_prev * gamma1).abs() <= self.cfg.beta_zero_tol * self.op_norm {
            gamma1 = 0.0;
        }

        let phi_prev = self.phi;
        let curvature = residual_curvature(c_prev, gamma1, 0.0);
        let mut entry = TraceEntry {
            t,
            alpha,
            beta_next,
            gamma1,
            gamma2: 0.0,
            delta1_next,
            cos: c_prev,
            sin: s_prev,
            residual_norm: phi_prev,
            curvature,
            hs_norm: (self.phi0 * self.phi0 - phi_prev * phi_prev).max(0.0).sqrt(),
            hr_norm: phi_prev * gamma1.hypot(delta1_next),
        };

        // s_0 = 0 is never offered as a solution.
        if !self.cfg.disable_sol_test
            && t > 1
            && sol_test(phi_prev, gamma1, delta1_next, self.phi0, self.cfg.eta)
        {
            self.trace.push(entry);
            let direction = self.iterate.clone();
            return Ok(Some(self.finish(direction, DirectionType::Sol, t, Termination::SolTest, curvature, phi_prev)));
        }
        if !self.cfg.disable_npc_test && npc_test(c_prev, gamma1) {
            self.trace.push(entry);
            let direction = self.residual.clone();
            return Ok(Some(self.finish(direction, DirectionType::Npc, t, Termination::NpcTest, curvature, phi_prev)));
        }

        let gamma2 = gamma1.hypot(beta_next);
        let mut v_next = None;
        if gamma2 != 0.0 {
            let c = gamma1 / gamma2;
            let s = beta_next / gamma2;
            let tau = c * phi_prev;
            let phi = s * phi_prev;
            let mut w = self.v.clone();
            w.axpy(-delta2, &self.w_prev, 1.0);
            w.axpy(-self.eps, &self.w_prev2, 1.0);
            w.unscale_mut(gamma2);
            self.iterate.axpy(tau, &w, 1.0);
            if beta_next != 0.0 {
                let vn = q.unscale(beta_next);
                self.residual.scale_mut(s * s);
                self.residual.axpy(-phi * c, &vn, 1.0);
                v_next = Some(vn);
            } else {
                self.residual.fill(0.0);
            }
            self.w_prev2 = std::mem::replace(&mut self.w_prev, w);
            self.c = c;
            self.s = s;
            self.phi = phi;
        } else {
            self.c = 0.0;
            self.s = 1.0;
            self.w_prev2 = std::mem::replace(&mut self.w_prev, Vector::zeros(self.v.len()));
        }
        entry.gamma2 = gamma2;
        self.trace.push(entry);
        self.delta1 = delta1_next;
        self.eps = eps_next;
        self.t = t;

        if !all_finite(&self.iterate) {
            self.finished = true;
            return Err(CoreError::NumericalBreakdown(format!("non-finite iterate at iteration {t}")));
        }

        if exhausted || t >= self.cfg.max_iters {
            let termination = if exhausted {
                if !self.cfg.disable_sol_test && self.phi <= self.cfg.beta_zero_tol * self.phi0 {
                    Termination::SolTest
                } else {
                    Termination::KrylovExhausted
                }
            } else {
                Termination::MaxIters
            };
            let direction = self.iterate.clone();
            let phi = self.phi;
            return Ok(Some(self.finish(direction, DirectionType::Sol, t + 1, termination, curvature, phi)));
        }

        let vn = v_next.expect("Lanczos vector exists when beta is nonzero");
        if self.cfg.full_reorthogonalize {
            self.basis.push(vn.clone());
        }
        self.v_prev = std::mem::replace(&mut self.v, vn);
        self.beta = beta_next;
        Ok(None)
    }

    fn finish(
        &mut self,
        direction: Vector,
        d_type: DirectionType,
        iters: usize,
        termination: Termination,
        residual_curvature: f64,
        residual_norm: f64,
    ) -> MinresResult {
        self.finished = true;
        MinresResult {
            direction,
            d_type,
            iters,
            termination,
            residual_curvature,
            residual_norm,
            operator_applications: self.op.apply_count() - self.applications_at_start,
            trace: self.trace.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn diag(d: &[f64]) -> SymmetricOperator {
        SymmetricOperator::from_matrix(DMatrix::from_diagonal(&Vector::from_column_slice(d))).unwrap()
    }

    #[test]
    fn identity_solved_in_one_step() {
        let op = SymmetricOperator::identity(4);
        let g = Vector::from_element(4, 1.0);
        let res = run_minres(&op, &g, &MinresConfig::default()).unwrap();
        assert_eq!(res.d_type, DirectionType::Sol);
        assert_eq!(res.iters, 2);
        assert!((&res.direction + &g).norm() <= 1e-15);
        assert!((op.apply(&res.direction) + &g).norm() <= 1e-15);
        assert_eq!(res.operator_applications, 1);
    }

    #[test]
    fn negative_identity_flags_gradient() {
        let op = SymmetricOperator::identity(3).shift(-2.0);
        let g = Vector::from_vec(vec![1.0, -2.0, 0.5]);
        let res = run_minres(&op, &g, &MinresConfig::default()).unwrap();
        assert_eq!(res.d_type, DirectionType::Npc);
        assert_eq!(res.iters, 1);
        assert_eq!(res.direction, -&g);
        assert_eq!(res.residual_curvature, -1.0);
    }

    #[test]
    fn example_with_steep_negative_direction() {
        // H = diag(4, -1), g = -(1, eps)
        let op = diag(&[4.0, -1.0]);
        let g = Vector::from_vec(vec![-1.0, -3.0]);
        let res = run_minres(&op, &g, &MinresConfig::default()).unwrap();
        assert_eq!(res.d_type, DirectionType::Npc);
        assert_eq!(res.iters, 1);
        assert_eq!(res.direction, -&g);

        let g = Vector::from_vec(vec![-1.0, -0.5]);
        let res = run_minres(&op, &g, &MinresConfig::default()).unwrap();
        assert_eq!(res.d_type, DirectionType::Npc);
        assert_eq!(res.iters, 2);
        // closed form of the first sine
        let (l, m, e): (f64, f64, f64) = (4.0, 1.0, 0.5);
        let s1 = e * (l + m) / ((1.0 + e * e) * (l * l + e * e * m * m)).sqrt();
        assert!((res.direction.norm() / g.norm() - s1).abs() <= 1e-12);
    }

    #[test]
    fn sol_test_edge_cases() {
        assert!(sol_test(0.0, 3.0, 1.0, 2.0, 0.0));
        assert!(!sol_test(2.0, 1.0, 0.5, 2.0, 100.0));
    }

    #[test]
    fn sol_test_matches_dense_norms_at_second_iteration() {
        let a = DMatrix::from_diagonal(&Vector::from_vec(vec![2.0, 1.0]));
        let op = SymmetricOperator::from_matrix(a.clone()).unwrap();
        let g = Vector::from_vec(vec![1.0, 1.0]);
        let mut it = MinresIteration::new(&op, &g, MinresConfig {
            eta: 10.0,
            disable_sol_test: true,
            disable_npc_test: true,
            ..MinresConfig::default()
        })
        .unwrap();
        it.step().unwrap();
        let s1 = it.iterate().clone();
        let r1 = -(&a * &s1 + &g);
        let hr = (&a * &r1).norm();
        let hs = (&a * &s1).norm();
        it.step().unwrap();
        let e = it.trace()[1];
        assert!((e.hr_norm - hr).abs() <= 1e-12 * (1.0 + hr));
        assert!((e.hs_norm - hs).abs() <= 1e-12 * (1.0 + hs));
        let fires = sol_test(e.residual_norm, e.gamma1, e.delta1_next, g.norm(), 10.0);
        assert_eq!(fires, hr <= 10.0 * hs);
    }

    #[test]
    fn npc_sign_cases() {
        assert!(npc_test(-1.0, -0.5));
        assert!(!npc_test(-1.0, 0.5));
        assert!(npc_test(-1.0, 0.0));
    }

    #[test]
    fn shifted_curvature_matches_dense_quadratic_form() {
        let op = diag(&[1.0, -1.0]);
        let shifted = op.shift(0.5);
        let g = Vector::from_vec(vec![0.3, 1.0]);
        let res = run_minres(&shifted, &g, &MinresConfig::with_eta(0.0)).unwrap();
        assert_eq!(res.d_type, DirectionType::Npc);
        let d = res.direction.normalize();
        let curv = res.residual_curvature - 0.5;
        let dense = d.dot(&op.apply(&d));
        assert!((curv - dense).abs() <= 1e-10);
        assert_eq!(residual_curvature(-1.0, -1.0, 0.0), -1.0);
    }

    #[test]
    fn shifted_zero_operator_has_zero_unshifted_curvature() {
        let shifted = SymmetricOperator::zero(3).shift(0.7);
        let g = Vector::from_vec(vec![1.0, 2.0, -1.0]);
        let mut it = MinresIteration::new(&shifted, &g, MinresConfig::default()).unwrap();
        it.step().unwrap();
        let e = it.trace()[0];
        assert!(residual_curvature(e.cos, e.gamma1, 0.7).abs() < 1e-15);
    }

    #[test]
    fn errors_on_bad_input() {
        let op = SymmetricOperator::identity(2);
        assert!(matches!(
            run_minres(&op, &Vector::zeros(2), &MinresConfig::default()),
            Err(CoreError::InvalidConfig(_))
        ));
        assert!(matches!(
            run_minres(&op, &Vector::zeros(3), &MinresConfig::default()),
            Err(CoreError::DimensionMismatch { .. })
        ));
        let nan = SymmetricOperator::from_fn(2, |v| v.map(|_| f64::NAN));
        assert!(matches!(
            run_minres(&nan, &Vector::from_vec(vec![1.0, 0.0]), &MinresConfig::default()),
            Err(CoreError::NumericalBreakdown(_))
        ));
        let cfg = MinresConfig {
            max_iters: 0,
            ..MinresConfig::default()
        };
        assert!(run_minres(&op, &Vector::from_vec(vec![1.0, 0.0]), &cfg).is_err());
    }

    #[test]
    fn null_space_gradient_is_zero_curvature() {
        let op = diag(&[0.0, 3.0]);
        let g = Vector::from_vec(vec![2.0, 0.0]);
        let res = run_minres(&op, &g, &MinresConfig::with_eta(0.0)).unwrap();
        assert_eq!(res.d_type, DirectionType::Npc);
        assert_eq!(res.iters, 1);
        assert_eq!(res.residual_curvature, 0.0);
    }

    #[test]
    fn max_iters_forces_solution() {
        let op = diag(&[1.0, 2.0, 3.0, 4.0]);
        let g = Vector::from_element(4, 1.0);
        let cfg = MinresConfig {
            eta: 0.0,
            max_iters: 2,
            ..MinresConfig::default()
        };
        let res = run_minres(&op, &g, &cfg).unwrap();
        assert_eq!(res.termination, Termination::MaxIters);
        assert_eq!(res.d_type, DirectionType::Sol);
        assert_eq!(res.operator_applications, 2);
        assert_eq!(res.trace.len(), 2);
    }

    #[test]
    fn one_application_per_iteration() {
        let op = diag(&[1.0, 2.0, 5.0, 7.0, 11.0]);
        let g = Vector::from_element(5, 1.0);
        let res = run_minres(&op, &g, &MinresConfig::with_eta(1e-3)).unwrap();
        assert_eq!(res.operator_applications, res.trace.len());
    }
}
