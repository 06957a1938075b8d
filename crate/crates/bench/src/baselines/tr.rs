use newton_mr_core::linalg::all_finite;
use newton_mr_core::{Problem, SymmetricOperator, Vector};

use super::SolverRun;
use crate::protocol::Protocol;
use crate::record::RunStatus;
use crate::BenchError;

const EXPAND_RATIO: f64 = 0.2;
const EXPAND: f64 = 3.0;
const SHRINK: f64 = 0.5;
const ROUNDOFF: f64 = 10.0 * f64::EPSILON;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SteihaugExit {
    Converged,
    Boundary,
    NegativeCurvature,
    MaxIters,
}

#[derive(Debug, Clone)]
pub struct SteihaugStep {
    pub step: Vector,
    /// `H * step`, accumulated without extra products.
    pub h_step: Vector,
    pub exit: SteihaugExit,
    pub hv_products: usize,
}

/// Positive `tau` with `||z + tau d|| = radius`.
fn to_boundary(z: &Vector, d: &Vector, radius: f64) -> f64 {
    let a = d.norm_squared();
    let b = 2.0 * z.dot(d);
    let c = z.norm_squared() - radius * radius;
    let disc = (b * b - 4.0 * a * c).max(0.0).sqrt();
    // c <= 0, so the root is nonnegative; this form avoids cancellation
    if b >= 0.0 {
        -2.0 * c / (b + disc)
    } else {
        (disc - b) / (2.0 * a)
    }
}

/// Truncated conjugate gradients on `min g^T p + p^T H p / 2` inside the
/// ball of the given radius.
pub fn steihaug_cg(h: &SymmetricOperator, g: &Vector, radius: f64, tol: f64, max_iters: usize) -> SteihaugStep {
    let n = g.len();
    let mut z = Vector::zeros(n);
    let mut hz = Vector::zeros(n);
    let mut r = g.clone();
    let mut d = -g;
    let mut hv = 0;
    let mut rr = r.norm_squared();
    if rr.sqrt() <= tol {
        return SteihaugStep {
            step: z,
            h_step: hz,
            exit: SteihaugExit::Converged,
            hv_products: 0,
        };
    }
    for _ in 0..max_iters {
        let hd = h.apply(&d);
        hv += 1;
        let dhd = d.dot(&hd);
        if dhd <= 0.0 {
            let tau = to_boundary(&z, &d, radius);
            z.axpy(tau, &d, 1.0);
            hz.axpy(tau, &hd, 1.0);
            return SteihaugStep {
                step: z,
                h_step: hz,
                exit: SteihaugExit::NegativeCurvature,
                hv_products: hv,
            };
        }
        let alpha = rr / dhd;
        let z_next = &z + &d * alpha;
        if z_next.norm() >= radius {
            let tau = to_boundary(&z, &d, radius);
            z.axpy(tau, &d, 1.0);
            hz.axpy(tau, &hd, 1.0);
            return SteihaugStep {
                step: z,
                h_step: hz,
                exit: SteihaugExit::Boundary,
                hv_products: hv,
            };
        }
        z = z_next;
        hz.axpy(alpha, &hd, 1.0);
        r.axpy(alpha, &hd, 1.0);
        let rr_next = r.norm_squared();
        if rr_next.sqrt() <= tol {
            return SteihaugStep {
                step: z,
                h_step: hz,
                exit: SteihaugExit::Converged,
                hv_products: hv,
            };
        }
        d = &d * (rr_next / rr) - &r;
        rr = rr_next;
    }
    SteihaugStep {
        step: z,
        h_step: hz,
        exit: SteihaugExit::MaxIters,
        hv_products: hv,
    }
}

/// Trust-region Newton with a Steihaug inner solve. The radius triples when
/// the actual-to-predicted reduction ratio exceeds 0.2 and halves otherwise.
pub fn tr_steihaug(problem: &dyn Problem, x0: &Vector, protocol: &Protocol) -> Result<SolverRun, BenchError> {
    let mut counter = protocol.counter();
    let mut radius = protocol.tr_initial_radius;
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
        if radius < protocol.min_step {
            break RunStatus::LineSearchFailed;
        }
        let h = problem.hessian_at(&x);
        let tol = protocol.theta.min(gnorm.sqrt()) * gnorm;
        let sub = steihaug_cg(&h, &g, radius, tol, protocol.inner_max_iters);
        counter.charge_hessian_vector(sub.hv_products);
        let predicted = -(g.dot(&sub.step) + 0.5 * sub.step.dot(&sub.h_step));
        let x_trial = &x + &sub.step;
        let f_trial = problem.value(&x_trial);
        counter.charge_value(1);
        let actual = f - f_trial;
        // below this both reductions are indistinguishable from rounding in f
        let noise = ROUNDOFF * f.abs();
        let at_roundoff = predicted <= noise && actual >= -noise;
        let ratio = if at_roundoff { 1.0 } else { actual / predicted };
        if ratio > EXPAND_RATIO {
            radius = (EXPAND * radius).min(protocol.tr_max_radius);
        } else {
            radius *= SHRINK;
        }
        if (actual > 0.0 || at_roundoff) && f_trial.is_finite() {
            x = x_trial;
            f = f_trial;
            g = problem.gradient(&x);
            counter.charge_gradient(1);
        }
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

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use newton_mr_core::problems::{ConvexQuadratic, QuarticSaddle};

    #[test]
    fn boundary_exit_on_negative_curvature() {
        let h = SymmetricOperator::from_matrix(DMatrix::from_diagonal(&Vector::from_vec(vec![1.0, -2.0]))).unwrap();
        let g = Vector::from_vec(vec![0.5, 0.3]);
        for radius in [0.1, 1.0, 7.5] {
            let sub = steihaug_cg(&h, &g, radius, 1e-12, 50);
            assert!(matches!(sub.exit, SteihaugExit::NegativeCurvature | SteihaugExit::Boundary));
            assert!((sub.step.norm() - radius).abs() <= 1e-10 * radius.max(1.0));
            let direct = h.apply(&sub.step);
            assert!((direct - &sub.h_step).norm() < 1e-12);
        }
    }

    #[test]
    fn interior_solution_for_large_radius() {
        let h = SymmetricOperator::from_matrix(DMatrix::from_diagonal(&Vector::from_vec(vec![2.0, 5.0]))).unwrap();
        let g = Vector::from_vec(vec![1.0, -1.0]);
        let sub = steihaug_cg(&h, &g, 10.0, 1e-14, 10);
        assert_eq!(sub.exit, SteihaugExit::Converged);
        assert!((sub.step - Vector::from_vec(vec![-0.5, 0.2])).norm() < 1e-14);
    }

    #[test]
    fn convex_quadratic_with_huge_radius_is_newton() {
        let p = ConvexQuadratic::new(10, 100.0, 3);
        let protocol = Protocol {
            tr_initial_radius: 1e10,
            ..Protocol::default()
        };
        let run = tr_steihaug(&p, &Vector::from_element(10, 0.5), &protocol).unwrap();
        assert_eq!(run.status, RunStatus::Converged);
        assert!(run.iterations <= 10, "{}", run.iterations);
    }

    #[test]
    fn escapes_saddle_neighbourhood() {
        let p = QuarticSaddle::new(2);
        let run = tr_steihaug(&p, &Vector::from_vec(vec![1e-6, 1e-6]), &Protocol::default()).unwrap();
        assert_eq!(run.status, RunStatus::Converged);
        assert!((run.f_final + 0.25).abs() < 1e-12);
    }

    #[test]
    fn boundary_root_is_nonnegative() {
        let z = Vector::from_vec(vec![0.5, 0.0]);
        for d in [Vector::from_vec(vec![1.0, 0.0]), Vector::from_vec(vec![-1.0, 0.0])] {
            let tau = to_boundary(&z, &d, 1.0);
            assert!(tau >= 0.0);
            assert!(((&z + &d * tau).norm() - 1.0).abs() < 1e-15);
        }
    }
}
