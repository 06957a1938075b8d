//! Objective functions with analytic gradients and Hessian-vector products.

mod analytic;
mod nlls;
mod planted;

pub use analytic::{analytic_suite, ConvexQuadratic, QuarticSaddle, Rosenbrock, RotatedQuartic};
pub use nlls::{regularized_nlls, synthetic_dataset, RegularizedNlls, SyntheticDataset};
pub use planted::{planted_spectrum_instance, planted_with_rotation, PlantedInstance, Rotation};

use crate::linalg::{SymmetricOperator, Vector};

/// Known optimal value with a short description of the minimizer.
#[derive(Debug, Clone, PartialEq)]
pub struct KnownOptimum {
    pub value: f64,
    pub description: String,
}

/// How benchmark starting points are drawn for a problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StartKind {
    StandardNormal,
    UnitSphere,
}

/// Smooth objective with gradient and matrix-free Hessian.
pub trait Problem: Send + Sync {
    fn name(&self) -> &str;
    fn dim(&self) -> usize;
    fn value(&self, x: &Vector) -> f64;
    fn gradient(&self, x: &Vector) -> Vector;
    /// Hessian at `x` as an operator with a fresh application counter.
    fn hessian_at(&self, x: &Vector) -> SymmetricOperator;

    fn known_optimum(&self) -> Option<KnownOptimum> {
        None
    }

    fn start_kind(&self) -> StartKind {
        StartKind::UnitSphere
    }
}
