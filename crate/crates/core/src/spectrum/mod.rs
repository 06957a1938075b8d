//! Dense ground truth for the Krylov solver.
//!
//! Everything here eigendecomposes or factorizes explicit matrices and is
//! meant for verification at small dimension, not for use inside solvers.

pub mod bounds;

pub use bounds::{
    bound_t_n, bound_t_nl, bound_t_p, bound_t_s, lanczos_eig_gap_bound, sphere_projection_constant, BoundInputs,
};

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::error::CoreError;
use crate::linalg::{DenseSymmetricMatrix, Vector};

/// Largest dimension the dense oracles accept.
pub const MAX_ORACLE_DIM: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumConfig {
    /// Eigenvalues closer than this multiple of `||M||` share an eigenspace.
    pub eig_cluster_tol: f64,
    /// Eigenspaces carrying less than this fraction of `||g||^2` are
    /// irrelevant.
    pub proj_tol: f64,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self {
            eig_cluster_tol: 1e-8,
            proj_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Sign {
    Positive,
    Zero,
    Negative,
}

/// Eigenvalue whose eigenspace is not orthogonal to `g`.
#[derive(Debug, Clone, Serialize)]
pub struct RelevantEigenvalue {
    pub lambda: f64,
    /// Squared norm of the projection of `g` onto the eigenspace.
    pub weight: f64,
    pub multiplicity: usize,
    pub sign: Sign,
    /// Orthonormal basis of the eigenspace, one column per eigenvector.
    #[serde(skip)]
    pub basis: DMatrix<f64>,
}

/// The eigenvalues of `M` visible from `g`, sorted in decreasing order.
#[derive(Debug, Clone, Serialize)]
pub struct SpectrumReport {
    pub relevant: Vec<RelevantEigenvalue>,
    pub psi_plus: usize,
    pub psi_minus: usize,
    pub psi_zero: usize,
    pub grade: usize,
    pub lambda_max_rel: f64,
    pub lambda_min_rel: f64,
    pub matrix_norm: f64,
    pub g_norm_sq: f64,
}

impl SpectrumReport {
    /// Relevant eigenvalue at the 1-based position `index`.
    pub fn at(&self, index: usize) -> Option<&RelevantEigenvalue> {
        index.checked_sub(1).and_then(|i| self.relevant.get(i))
    }

    /// Weight carried by the nonzero relevant eigenvalues.
    pub fn nonzero_mass(&self) -> f64 {
        self.relevant.iter().filter(|e| e.sign != Sign::Zero).map(|e| e.weight).sum()
    }

    /// Weight carried by the relevant eigenvalues at 1-based positions in
    /// `range`.
    pub fn mass(&self, range: std::ops::RangeInclusive<usize>) -> f64 {
        range.filter_map(|i| self.at(i)).map(|e| e.weight).sum()
    }

    /// Largest relevant curvature magnitude.
    pub fn relevant_norm(&self) -> f64 {
        self.relevant
            .iter()
            .filter(|e| e.sign != Sign::Zero)
            .fold(0.0_f64, |acc, e| acc.max(e.lambda.abs()))
    }

    /// Orthogonal projector onto the nonzero relevant eigenspaces.
    pub fn relevant_projector(&self) -> Option<DMatrix<f64>> {
        let mut out: Option<DMatrix<f64>> = None;
        for e in self.relevant.iter().filter(|e| e.sign != Sign::Zero) {
            let p = &e.basis * e.basis.transpose();
            out = Some(match out {
                Some(acc) => acc + p,
                None => p,
            });
        }
        out
    }
}

/// Eigendecomposes `m`, groups numerically equal eigenvalues and keeps the
/// groups `g` projects onto.
pub fn g_relevant_spectrum(
    m: &DenseSymmetricMatrix,
    g: &Vector,
    cfg: &SpectrumConfig,
) -> Result<SpectrumReport, CoreError> {
    check_oracle_input(m, g)?;
    let g_norm_sq = g.norm_squared();
    if g_norm_sq == 0.0 {
        return Err(CoreError::InvalidConfig("zero vector has no relevant spectrum".into()));
    }
    let eig = SymmetricEigen::try_new(m.matrix().clone(), f64::EPSILON, 0)
        .ok_or_else(|| CoreError::NumericalBreakdown("eigendecomposition did not converge".into()))?;
    let mut order: Vec<usize> = (0..m.dim()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let norm = eig.eigenvalues.iter().fold(0.0_f64, |acc, l| acc.max(l.abs()));
    let cluster_gap = cfg.eig_cluster_tol * norm;

    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for &k in &order {
        match clusters.last_mut() {
            Some(c) if eig.eigenvalues[*c.last().unwrap()] - eig.eigenvalues[k] <= cluster_gap => c.push(k),
            _ => clusters.push(vec![k]),
        }
    }

    let mut relevant = Vec::new();
    for c in clusters {
        let basis = DMatrix::from_columns(&c.iter().map(|&k| eig.eigenvectors.column(k).into_owned()).collect::<Vec<_>>());
        let weight = basis.tr_mul(g).norm_squared();
        if weight <= cfg.proj_tol * g_norm_sq {
            continue;
        }
        let lambda = c.iter().map(|&k| eig.eigenvalues[k]).sum::<f64>() / c.len() as f64;
        let sign = if lambda.abs() <= cluster_gap {
            Sign::Zero
        } else if lambda > 0.0 {
            Sign::Positive
        } else {
            Sign::Negative
        };
        relevant.push(RelevantEigenvalue {
            lambda: if sign == Sign::Zero { 0.0 } else { lambda },
            weight,
            multiplicity: c.len(),
            sign,
            basis,
        });
    }

    let count = |s: Sign| relevant.iter().filter(|e| e.sign == s).count();
    let (psi_plus, psi_minus, psi_zero) = (count(Sign::Positive), count(Sign::Negative), count(Sign::Zero));
    Ok(SpectrumReport {
        lambda_max_rel: relevant.first().map_or(f64::NAN, |e| e.lambda),
        lambda_min_rel: relevant.last().map_or(f64::NAN, |e| e.lambda),
        grade: relevant.len(),
        psi_plus,
        psi_minus,
        psi_zero,
        relevant,
        matrix_norm: norm,
        g_norm_sq,
    })
}

fn check_oracle_input(m: &DenseSymmetricMatrix, g: &Vector) -> Result<(), CoreError> {
    if g.len() != m.dim() {
        return Err(CoreError::DimensionMismatch {
            expected: m.dim(),
            found: g.len(),
        });
    }
    if m.dim() > MAX_ORACLE_DIM {
        return Err(CoreError::InvalidConfig(format!(
            "dense oracles support dimension <= {MAX_ORACLE_DIM}, got {}",
            m.dim()
        )));
    }
    Ok(())
}

/// Orthonormal basis of `K_t(M, g)`, built by orthogonalizing
/// `g, M g, M^2 g, ...` one power at a time. Stops early once the next
/// direction is numerically dependent, so the column count never exceeds
/// the grade.
pub fn krylov_basis(m: &DenseSymmetricMatrix, g: &Vector, t: usize, rel_tol: f64) -> DMatrix<f64> {
    let a = m.matrix();
    let scale = m.spectral_norm().max(f64::MIN_POSITIVE);
    let mut cols: Vec<Vector> = Vec::with_capacity(t);
    let gn = g.norm();
    if gn == 0.0 || t == 0 {
        return DMatrix::zeros(g.len(), 0);
    }
    cols.push(g / gn);
    while cols.len() < t {
        let mut w = a * cols.last().unwrap();
        for _ in 0..2 {
            for c in &cols {
                let p = c.dot(&w);
                w.axpy(-p, c, 1.0);
            }
        }
        let wn = w.norm();
        if wn <= rel_tol * scale {
            break;
        }
        cols.push(w / wn);
    }
    DMatrix::from_columns(&cols)
}

/// Dimension of the full Krylov space of `g` under `M`.
pub fn krylov_rank(m: &DenseSymmetricMatrix, g: &Vector, rel_tol: f64) -> usize {
    krylov_basis(m, g, m.dim(), rel_tol).ncols()
}

/// Minimizer of `||M s + g||` over `K_t(M, g)` by a dense least-squares
/// solve in an explicit Krylov basis. Ties are broken by minimum norm.
pub fn krylov_brute_force_minres(m: &DenseSymmetricMatrix, g: &Vector, t: usize) -> Result<Vector, CoreError> {
    check_oracle_input(m, g)?;
    if t == 0 || t > m.dim() {
        return Err(CoreError::InvalidConfig(format!("t must lie in 1..={}, got {t}", m.dim())));
    }
    let basis = krylov_basis(m, g, t, 1e-10);
    let mb = m.matrix() * &basis;
    let svd = mb.svd(true, true);
    let tol = 1e-12 * svd.singular_values.max().max(f64::MIN_POSITIVE);
    let y = svd
        .solve(&(-g), tol)
        .map_err(|e| CoreError::NumericalBreakdown(e.to_string()))?;
    Ok(basis * y)
}

/// Smallest eigenvalue of the symmetric tridiagonal matrix with diagonal
/// `diag` and off-diagonal `off` (`off.len() == diag.len() - 1`).
pub fn tridiagonal_min_eigenvalue(diag: &[f64], off: &[f64]) -> f64 {
    let n = diag.len();
    assert!(n >= 1 && off.len() + 1 == n, "malformed tridiagonal matrix");
    let mut t = DMatrix::zeros(n, n);
    for i in 0..n {
        t[(i, i)] = diag[i];
        if i + 1 < n {
            t[(i, i + 1)] = off[i];
            t[(i + 1, i)] = off[i];
        }
    }
    t.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{planted_spectrum_instance, planted_with_rotation, Rotation};

    fn diag(d: &[f64]) -> DenseSymmetricMatrix {
        DenseSymmetricMatrix::from_diagonal(d)
    }

    #[test]
    fn axis_aligned_report() {
        let r = g_relevant_spectrum(&diag(&[2.0, 2.0, -1.0]), &Vector::from_vec(vec![1.0, 0.0, 1.0]), &SpectrumConfig::default()).unwrap();
        assert_eq!(r.relevant.len(), 2);
        assert_eq!(r.relevant[0].lambda, 2.0);
        assert_eq!(r.relevant[0].weight, 1.0);
        assert_eq!(r.relevant[0].multiplicity, 2);
        assert_eq!(r.relevant[1].lambda, -1.0);
        assert_eq!(r.relevant[1].weight, 1.0);
        assert_eq!((r.psi_plus, r.psi_minus, r.psi_zero, r.grade), (1, 1, 0, 2));
    }

    #[test]
    fn null_component_counts_as_zero_eigenvalue() {
        let r = g_relevant_spectrum(&diag(&[1.0, 0.0]), &Vector::from_vec(vec![1.0, 1.0]), &SpectrumConfig::default()).unwrap();
        assert_eq!(r.psi_zero, 1);
        assert_eq!(r.grade, 2);
        assert_eq!(r.relevant[1].lambda, 0.0);
    }

    #[test]
    fn planted_pairs_round_trip() {
        let eigs = [6.0, 2.5, 0.7, -0.4, -3.0];
        let weights = [0.5, 1.0, 2.0, 0.25, 1.5];
        let (m, g) = planted_spectrum_instance(&eigs, &weights, 15, 21).unwrap();
        let r = g_relevant_spectrum(&m, &g, &SpectrumConfig::default()).unwrap();
        assert_eq!(r.grade, 5);
        for (e, (l, w)) in r.relevant.iter().zip(eigs.iter().zip(weights.iter())) {
            assert!((e.lambda - l).abs() <= 1e-8);
            assert!((e.weight - w).abs() <= 1e-8 * w);
        }
        assert_eq!(krylov_rank(&m, &g, 1e-10), r.grade);
        assert!(r.nonzero_mass() <= g.norm_squared() + 1e-10);
    }

    #[test]
    fn krylov_rank_agrees_with_spectrum_count_on_example_shape() {
        let mut eigs: Vec<f64> = (0..18).map(|i| 0.5 + i as f64 * 0.5).collect();
        eigs.push(-1.5);
        eigs.push(0.0);
        let weights = vec![1.0; 20];
        let (m, g) = planted_spectrum_instance(&eigs, &weights, 20, 2).unwrap();
        let r = g_relevant_spectrum(&m, &g, &SpectrumConfig::default()).unwrap();
        assert_eq!((r.psi_plus, r.psi_minus, r.psi_zero), (18, 1, 1));
        assert_eq!(krylov_rank(&m, &g, 1e-10), 20);
    }

    #[test]
    fn brute_force_on_identity() {
        let g = Vector::from_vec(vec![1.0, -2.0, 0.5]);
        let s = krylov_brute_force_minres(&diag(&[1.0, 1.0, 1.0]), &g, 1).unwrap();
        assert!((s + &g).norm() < 1e-15);
    }

    #[test]
    fn brute_force_exhausted_space_solves_consistent_system() {
        let inst = planted_with_rotation(&[3.0, -1.0, 0.5], &[1.0, 2.0, 0.3], 8, 5, Rotation::Random).unwrap();
        let s = krylov_brute_force_minres(&inst.matrix, &inst.g, 3).unwrap();
        let res = inst.matrix.matrix() * &s + &inst.g;
        assert!(res.norm() <= 1e-9 * inst.g.norm());
    }

    #[test]
    fn brute_force_agrees_with_normal_equations() {
        let (m, g) = planted_spectrum_instance(&[4.0, 1.0, -2.0, 0.3, -0.7], &[1.0; 5], 9, 8).unwrap();
        for t in 1..=5 {
            let s = krylov_brute_force_minres(&m, &g, t).unwrap();
            let b = krylov_basis(&m, &g, t, 1e-10);
            let mb = m.matrix() * &b;
            let lhs = mb.tr_mul(&mb);
            let rhs = -mb.tr_mul(&g);
            let y = lhs.lu().solve(&rhs).unwrap();
            let s2 = b * y;
            assert!((&s - &s2).norm() <= 1e-8 * s2.norm().max(1e-12), "t = {t}");
        }
    }

    #[test]
    fn tridiagonal_eigenvalue() {
        // [[2, 1], [1, 2]] has eigenvalues 1 and 3
        assert!((tridiagonal_min_eigenvalue(&[2.0, 2.0], &[1.0]) - 1.0).abs() < 1e-14);
        assert_eq!(tridiagonal_min_eigenvalue(&[-4.0], &[]), -4.0);
    }

    #[test]
    fn oracle_rejects_bad_input() {
        assert!(g_relevant_spectrum(&diag(&[1.0]), &Vector::zeros(1), &SpectrumConfig::default()).is_err());
        assert!(g_relevant_spectrum(&diag(&[1.0]), &Vector::zeros(2), &SpectrumConfig::default()).is_err());
        assert!(krylov_brute_force_minres(&diag(&[1.0]), &Vector::from_vec(vec![1.0]), 2).is_err());
    }
}
