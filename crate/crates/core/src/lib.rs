//! Newton-MR: nonconvex optimization with MINRES as the inner solver.
//!
//! The crate provides the MINRES iteration with solution and nonpositive
//! curvature tests, the associated line searches, the outer Newton-MR loop
//! with an optional negative curvature probe, spectral diagnostics for
//! Krylov iteration bounds, and a set of test problems.

pub mod error;
pub mod linalg;
pub mod linesearch;
pub mod minres;
pub mod newton_mr;
pub mod oracle;
pub mod problems;
pub mod rng;
pub mod spectrum;

pub use error::{CoreError, Result};
pub use linalg::{DenseSymmetricMatrix, SymmetricOperator, Vector};
pub use minres::{run_minres, DirectionType, MinresConfig, MinresResult, Termination};
pub use newton_mr::{
    negative_curvature_probe, solve_first_order, solve_second_order, FirstOrderConfig, SecondOrderConfig,
    SolveResult, SolveStatus,
};
pub use problems::Problem;
