use std::sync::Arc;

use nalgebra::DMatrix;

use super::planted::random_orthogonal;
use super::{KnownOptimum, Problem};
use crate::linalg::{SymmetricOperator, Vector};
use crate::rng;

/// Chained Rosenbrock function.
#[derive(Debug, Clone)]
pub struct Rosenbrock {
    dim: usize,
    name: String,
}

impl Rosenbrock {
    pub fn new(dim: usize) -> Self {
        assert!(dim >= 2, "Rosenbrock needs at least two variables");
        Self {
            dim,
            name: format!("rosenbrock-{dim}"),
        }
    }
}

impl Problem for Rosenbrock {
    fn name(&self) -> &str {
        &self.name
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &Vector) -> f64 {
        (0..self.dim - 1)
            .map(|i| 100.0 * (x[i + 1] - x[i] * x[i]).powi(2) + (1.0 - x[i]).powi(2))
            .sum()
    }

    fn gradient(&self, x: &Vector) -> Vector {
        let mut g = Vector::zeros(self.dim);
        for i in 0..self.dim - 1 {
            let t = x[i + 1] - x[i] * x[i];
            g[i] += -400.0 * x[i] * t - 2.0 * (1.0 - x[i]);
            g[i + 1] += 200.0 * t;
        }
        g
    }

    fn hessian_at(&self, x: &Vector) -> SymmetricOperator {
        let n = self.dim;
        let mut diag = Vector::zeros(n);
        let mut off = Vector::zeros(n - 1);
        for i in 0..n - 1 {
            diag[i] += 1200.0 * x[i] * x[i] - 400.0 * x[i + 1] + 2.0;
            diag[i + 1] += 200.0;
            off[i] = -400.0 * x[i];
        }
        SymmetricOperator::from_fn(n, move |v| {
            let mut out = diag.component_mul(v);
            for i in 0..n - 1 {
                out[i] += off[i] * v[i + 1];
                out[i + 1] += off[i] * v[i];
            }
            out
        })
    }

    fn known_optimum(&self) -> Option<KnownOptimum> {
        Some(KnownOptimum {
            value: 0.0,
            description: "x = (1, ..., 1)".into(),
        })
    }
}

/// `x^4/4 - x^2/2 + |y|^2/2`: a strict saddle at the origin and minima at
/// `(+-1, 0)`.
#[derive(Debug, Clone)]
pub struct QuarticSaddle {
    dim: usize,
    name: String,
}

impl QuarticSaddle {
    pub fn new(dim: usize) -> Self {
        assert!(dim >= 1);
        let name = if dim == 2 {
            "quartic-saddle".to_string()
        } else {
            format!("quartic-saddle-{dim}")
        };
        Self { dim, name }
    }
}

impl Problem for QuarticSaddle {
    fn name(&self) -> &str {
        &self.name
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &Vector) -> f64 {
        let t = x[0];
        0.25 * t.powi(4) - 0.5 * t * t + 0.5 * x.rows(1, self.dim - 1).norm_squared()
    }

    fn gradient(&self, x: &Vector) -> Vector {
        let mut g = x.clone();
        g[0] = x[0].powi(3) - x[0];
        g
    }

    fn hessian_at(&self, x: &Vector) -> SymmetricOperator {
        let h00 = 3.0 * x[0] * x[0] - 1.0;
        SymmetricOperator::from_fn(self.dim, move |v| {
            let mut out = v.clone();
            out[0] *= h00;
            out
        })
    }

    fn known_optimum(&self) -> Option<KnownOptimum> {
        Some(KnownOptimum {
            value: -0.25,
            description: "x = (+-1, 0, ..., 0)".into(),
        })
    }
}

/// Separable quadratic-plus-quartic in rotated coordinates `z = Q^T x`:
/// `sum_i a_i z_i^2 / 2 + z_i^4 / 4`. Negative `a_i` make it indefinite near
/// the origin while the quartic keeps it bounded below.
#[derive(Debug, Clone)]
pub struct RotatedQuartic {
    rotation: Arc<DMatrix<f64>>,
    coeffs: Vector,
    name: String,
}

impl RotatedQuartic {
    pub fn new(coeffs: Vec<f64>, seed: u64) -> Self {
        let d = coeffs.len();
        let rotation = random_orthogonal(d, &mut rng::stream(seed, "rotated-quartic"));
        Self {
            rotation: Arc::new(rotation),
            coeffs: Vector::from_vec(coeffs),
            name: format!("indefinite-quartic-{d}"),
        }
    }

    fn coords(&self, x: &Vector) -> Vector {
        self.rotation.tr_mul(x)
    }
}

impl Problem for RotatedQuartic {
    fn name(&self) -> &str {
        &self.name
    }

    fn dim(&self) -> usize {
        self.coeffs.len()
    }

    fn value(&self, x: &Vector) -> f64 {
        let z = self.coords(x);
        z.iter()
            .zip(self.coeffs.iter())
            .map(|(z, a)| 0.5 * a * z * z + 0.25 * z.powi(4))
            .sum()
    }

    fn gradient(&self, x: &Vector) -> Vector {
        let z = self.coords(x);
        let gz = z.zip_map(&self.coeffs, |z, a| a * z + z.powi(3));
        &*self.rotation * gz
    }

    fn hessian_at(&self, x: &Vector) -> SymmetricOperator {
        let z = self.coords(x);
        let curv = z.zip_map(&self.coeffs, |z, a| a + 3.0 * z * z);
        let q = Arc::clone(&self.rotation);
        SymmetricOperator::from_fn(self.dim(), move |v| &*q * q.tr_mul(v).component_mul(&curv))
    }

    fn known_optimum(&self) -> Option<KnownOptimum> {
        // each coordinate with a < 0 settles at z^2 = -a
        let value = self.coeffs.iter().filter(|&&a| a < 0.0).map(|a| -a * a / 4.0).sum();
        Some(KnownOptimum {
            value,
            description: "z_i = +-sqrt(-a_i) where a_i < 0, else 0".into(),
        })
    }
}

/// `x^T A x / 2 - b^T x` with `A` positive definite.
#[derive(Debug, Clone)]
pub struct ConvexQuadratic {
    matrix: Arc<DMatrix<f64>>,
    rhs: Vector,
    name: String,
}

impl ConvexQuadratic {
    /// Eigenvalues log-spaced in `[1, condition]` under a seeded rotation.
    pub fn new(dim: usize, condition: f64, seed: u64) -> Self {
        let mut r = rng::stream(seed, "convex-quadratic");
        let q = random_orthogonal(dim, &mut r);
        let eigs = Vector::from_iterator(
            dim,
            (0..dim).map(|i| condition.powf(i as f64 / (dim.max(2) - 1) as f64)),
        );
        let a = &q * DMatrix::from_diagonal(&eigs) * q.transpose();
        let a = (&a + a.transpose()) * 0.5;
        Self {
            matrix: Arc::new(a),
            rhs: rng::normal_vector(&mut r, dim),
            name: format!("convex-quadratic-{dim}"),
        }
    }
}

impl Problem for ConvexQuadratic {
    fn name(&self) -> &str {
        &self.name
    }

    fn dim(&self) -> usize {
        self.rhs.len()
    }

    fn value(&self, x: &Vector) -> f64 {
        0.5 * x.dot(&(&*self.matrix * x)) - self.rhs.dot(x)
    }

    fn gradient(&self, x: &Vector) -> Vector {
        &*self.matrix * x - &self.rhs
    }

    fn hessian_at(&self, _x: &Vector) -> SymmetricOperator {
        let a = Arc::clone(&self.matrix);
        SymmetricOperator::from_fn(self.dim(), move |v| &*a * v)
    }

    fn known_optimum(&self) -> Option<KnownOptimum> {
        let sol = (*self.matrix).clone().cholesky()?.solve(&self.rhs);
        Some(KnownOptimum {
            value: -0.5 * self.rhs.dot(&sol),
            description: "x = A^{-1} b".into(),
        })
    }
}

/// Small deterministic collection of smooth nonconvex and convex test
/// functions.
pub fn analytic_suite() -> Vec<Arc<dyn Problem>> {
    vec![
        Arc::new(Rosenbrock::new(2)),
        Arc::new(Rosenbrock::new(10)),
        Arc::new(QuarticSaddle::new(2)),
        Arc::new(QuarticSaddle::new(5)),
        Arc::new(RotatedQuartic::new(vec![-2.0, -1.0, 0.5, 3.0], 1)),
        Arc::new(RotatedQuartic::new(
            vec![-4.0, -1.5, -0.5, 0.25, 0.5, 1.0, 2.0, 3.0, 5.0, 8.0, 10.0, 12.0],
            2,
        )),
        Arc::new(ConvexQuadratic::new(10, 100.0, 3)),
    ]
}
