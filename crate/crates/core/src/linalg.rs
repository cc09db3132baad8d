//! Small dense linear-algebra helpers built on `nalgebra`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Relative positive-definiteness tolerance: a symmetric matrix is treated as
/// singular when `lambda_min <= PD_TOLERANCE * lambda_max`.
pub const PD_TOLERANCE: f64 = 1e-12;

/// Smallest and largest eigenvalues of a symmetric matrix.
///
/// Round-off negatives are clamped to zero, so the result is suitable for
/// positive semidefinite Gram matrices.
pub fn symmetric_eigen_extremes(matrix: &DMatrix<f64>) -> (f64, f64) {
    let (lo, hi) = raw_eigen_extremes(matrix);
    (lo.max(0.0), hi.max(0.0))
}

fn raw_eigen_extremes(matrix: &DMatrix<f64>) -> (f64, f64) {
    if matrix.nrows() == 0 {
        return (0.0, 0.0);
    }
    if matrix.nrows() == 1 {
        let v = matrix[(0, 0)];
        return (v, v);
    }
    let eig = SymmetricEigen::new(matrix.clone());
    let lo = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = eig.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

/// Check that `matrix` is symmetric positive definite within [`PD_TOLERANCE`].
pub fn check_spd(matrix: &DMatrix<f64>) -> Result<()> {
    if !matrix.is_square() {
        return Err(Error::Dimension {
            expected: matrix.nrows(),
            got: matrix.ncols(),
        });
    }
    if matrix.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular { lambda_min: f64::NAN });
    }
    let (lo, hi) = raw_eigen_extremes(matrix);
    if !(hi > 0.0) || lo <= PD_TOLERANCE * hi {
        return Err(Error::Singular { lambda_min: lo });
    }
    Ok(())
}

/// Lower Cholesky factor of an SPD matrix.
pub fn cholesky_lower(matrix: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_spd(matrix)?;
    let sym = symmetrize(matrix);
    match sym.cholesky() {
        Some(c) => Ok(c.l()),
        None => Err(Error::Singular {
            lambda_min: raw_eigen_extremes(matrix).0,
        }),
    }
}

/// Solve `matrix * v = rhs` for symmetric positive definite `matrix`.
pub fn solve_spd(matrix: &DMatrix<f64>, rhs: &DVector<f64>) -> Result<DVector<f64>> {
    if rhs.len() != matrix.nrows() {
        return Err(Error::Dimension {
            expected: matrix.nrows(),
            got: rhs.len(),
        });
    }
    check_spd(matrix)?;
    let chol = symmetrize(matrix).cholesky().ok_or(Error::Singular {
        lambda_min: raw_eigen_extremes(matrix).0,
    })?;
    Ok(chol.solve(rhs))
}

/// Inverse of an SPD matrix.
pub fn inverse_spd(matrix: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_spd(matrix)?;
    let chol = symmetrize(matrix).cholesky().ok_or(Error::Singular {
        lambda_min: raw_eigen_extremes(matrix).0,
    })?;
    Ok(symmetrize(&chol.inverse()))
}

pub fn symmetrize(matrix: &DMatrix<f64>) -> DMatrix<f64> {
    (matrix + matrix.transpose()) * 0.5
}

/// Kronecker product `I_k ⊗ m`.
pub fn identity_kron(k: usize, m: &DMatrix<f64>) -> DMatrix<f64> {
    let q = m.nrows();
    let mut out = DMatrix::zeros(k * q, k * q);
    for b in 0..k {
        out.view_mut((b * q, b * q), (q, q)).copy_from(m);
    }
    out
}
