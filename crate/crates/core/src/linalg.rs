//! Dense vectors and matrix-free symmetric operators.
//!
//! Every solver in this crate touches the Hessian only through
//! [`SymmetricOperator::apply`], which keeps a tally of how many products
//! were formed. Shifted views share that tally with their base operator.

use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::CoreError;

/// Dense real vector.
pub type Vector = DVector<f64>;

type ApplyFn = dyn Fn(&Vector) -> Vector + Send + Sync;

/// Matrix-free symmetric linear map `v -> H v`.
///
/// Cloning is cheap and clones share the application counter.
#[derive(Clone)]
pub struct SymmetricOperator {
    dim: usize,
    map: Arc<ApplyFn>,
    applications: Arc<AtomicUsize>,
}

impl SymmetricOperator {
    /// Wraps a closure as an operator of dimension `dim`.
    ///
    /// The closure is trusted to be linear and symmetric. Output length must
    /// equal `dim`.
    pub fn from_fn<F>(dim: usize, map: F) -> Self
    where
        F: Fn(&Vector) -> Vector + Send + Sync + 'static,
    {
        Self {
            dim,
            map: Arc::new(map),
            applications: Arc::new(AtomicUsize::new(0)),
        }
    }

    /// Operator backed by an explicit matrix. The matrix is symmetrized.
    pub fn from_matrix(matrix: DMatrix<f64>) -> Result<Self, CoreError> {
        DenseSymmetricMatrix::new(matrix).map(|m| m.to_operator())
    }

    pub fn zero(dim: usize) -> Self {
        Self::from_fn(dim, move |_| Vector::zeros(dim))
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_fn(dim, |v| v.clone())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Computes `H v` and bumps the shared application counter.
    pub fn apply(&self, v: &Vector) -> Vector {
        assert_eq!(
            v.len(),
            self.dim,
            "operator of dimension {} applied to vector of length {}",
            self.dim,
            v.len()
        );
        self.applications.fetch_add(1, Ordering::Relaxed);
        (self.map)(v)
    }

    /// Number of products formed through this operator or any view sharing
    /// its counter.
    pub fn apply_count(&self) -> usize {
        self.applications.load(Ordering::Relaxed)
    }

    pub fn reset_count(&self) {
        self.applications.store(0, Ordering::Relaxed);
    }

    /// The view `v -> H v + sigma v`. Its products are charged to the same
    /// counter as `self`.
    pub fn shift(&self, sigma: f64) -> SymmetricOperator {
        let base = Arc::clone(&self.map);
        SymmetricOperator {
            dim: self.dim,
            map: Arc::new(move |v: &Vector| {
                let mut out = base(v);
                out.axpy(sigma, v, 1.0);
                out
            }),
            applications: Arc::clone(&self.applications),
        }
    }

    /// Materializes the operator column by column. Costs `dim` products.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.dim, self.dim);
        let mut e = Vector::zeros(self.dim);
        for j in 0..self.dim {
            e[j] = 1.0;
            out.set_column(j, &self.apply(&e));
            e[j] = 0.0;
        }
        out
    }
}

impl fmt::Debug for SymmetricOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SymmetricOperator")
            .field("dim", &self.dim)
            .field("applications", &self.apply_count())
            .finish()
    }
}

/// Explicit symmetric matrix, stored as `(A + A^T) / 2` of its input.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseSymmetricMatrix {
    matrix: DMatrix<f64>,
}

impl DenseSymmetricMatrix {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self, CoreError> {
        if !matrix.is_square() {
            return Err(CoreError::DimensionMismatch {
                expected: matrix.nrows(),
                found: matrix.ncols(),
            });
        }
        if matrix.iter().any(|x| !x.is_finite()) {
            return Err(CoreError::NonFinite("matrix entry"));
        }
        let symmetric = (&matrix + matrix.transpose()) * 0.5;
        Ok(Self { matrix: symmetric })
    }

    pub fn from_diagonal(diagonal: &[f64]) -> Self {
        Self {
            matrix: DMatrix::from_diagonal(&Vector::from_column_slice(diagonal)),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }

    /// Operator view with a fresh application counter.
    pub fn to_operator(&self) -> SymmetricOperator {
        let m = self.matrix.clone();
        SymmetricOperator::from_fn(self.dim(), move |v| &m * v)
    }

    /// Spectral norm, taken as the largest absolute eigenvalue.
    pub fn spectral_norm(&self) -> f64 {
        self.eigenvalues().iter().fold(0.0_f64, |acc, l| acc.max(l.abs()))
    }

    pub fn eigenvalues(&self) -> Vector {
        self.matrix.clone().symmetric_eigenvalues()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// `sign` with the convention `sign(0) = +1`.
pub fn sign_nonneg(x: f64) -> f64 {
    if x < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// True when every entry is finite.
pub fn all_finite(v: &Vector) -> bool {
    v.iter().all(|x| x.is_finite())
}
