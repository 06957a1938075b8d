use nalgebra::DMatrix;
use rand::Rng;

use crate::error::CoreError;
use crate::linalg::{DenseSymmetricMatrix, Vector};
use crate::rng;

const PAD_RANGE: (f64, f64) = (3.0, 5.0);
const PAD_SEPARATION: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rotation {
    Identity,
    Random,
}

/// Symmetric matrix with a prescribed spectrum as seen through `g`.
#[derive(Debug, Clone)]
pub struct PlantedInstance {
    pub matrix: DenseSymmetricMatrix,
    pub g: Vector,
    pub rotation: DMatrix<f64>,
    /// Diagonal of the spectral factor, planted values first.
    pub eigenvalues: Vector,
}

/// Haar-distributed orthogonal matrix from the QR factorization of a
/// Gaussian matrix.
pub(crate) fn random_orthogonal<R: Rng + ?Sized>(d: usize, r: &mut R) -> DMatrix<f64> {
    let cols: Vec<Vector> = (0..d).map(|_| rng::normal_vector(r, d)).collect();
    let qr = DMatrix::from_columns(&cols).qr();
    let (mut q, rmat) = qr.unpack();
    for j in 0..d {
        if rmat[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// `H = Q diag(lambda) Q^T` and `g = Q w`, where `w_i^2` equals the given
/// weight on the planted coordinates and vanishes on the padding.
pub fn planted_spectrum_instance(
    eigenvalues: &[f64],
    weights: &[f64],
    d: usize,
    seed: u64,
) -> Result<(DenseSymmetricMatrix, Vector), CoreError> {
    let inst = planted_with_rotation(eigenvalues, weights, d, seed, Rotation::Random)?;
    Ok((inst.matrix, inst.g))
}

pub fn planted_with_rotation(
    eigenvalues: &[f64],
    weights: &[f64],
    d: usize,
    seed: u64,
    rotation: Rotation,
) -> Result<PlantedInstance, CoreError> {
    if eigenvalues.len() != weights.len() {
        return Err(CoreError::DimensionMismatch {
            expected: eigenvalues.len(),
            found: weights.len(),
        });
    }
    if eigenvalues.len() > d {
        return Err(CoreError::DimensionMismatch {
            expected: d,
            found: eigenvalues.len(),
        });
    }
    if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) || eigenvalues.iter().any(|l| !l.is_finite()) {
        return Err(CoreError::InvalidConfig("planted values must be finite with nonnegative weights".into()));
    }
    if weights.iter().sum::<f64>() <= 0.0 {
        return Err(CoreError::InvalidConfig("planted weights must have positive sum".into()));
    }

    let mut r = rng::stream(seed, "planted-spectrum");
    let mut lambda: Vec<f64> = eigenvalues.to_vec();
    while lambda.len() < d {
        let cand = r.gen_range(PAD_RANGE.0..PAD_RANGE.1);
        if lambda.iter().all(|l| (l - cand).abs() > PAD_SEPARATION) {
            lambda.push(cand);
        }
    }
    let q = match rotation {
        Rotation::Identity => DMatrix::identity(d, d),
        Rotation::Random => random_orthogonal(d, &mut r),
    };
    let lambda = Vector::from_vec(lambda);
    let w = Vector::from_iterator(d, (0..d).map(|i| weights.get(i).map_or(0.0, |w| w.sqrt())));
    let h = &q * DMatrix::from_diagonal(&lambda) * q.transpose();
    Ok(PlantedInstance {
        matrix: DenseSymmetricMatrix::new(h)?,
        g: &q * w,
        rotation: q,
        eigenvalues: lambda,
    })
}
