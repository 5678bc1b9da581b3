//! Small Hermitian helpers on top of nalgebra.

use nalgebra::{Cholesky, SymmetricEigen};

use crate::sampler::{CMatrix, C64};

/// Spectral residual contract: `|G v - l v| <= 1e-8 scale` per pair.
pub const EIG_RESIDUAL_TOL: f64 = 1e-8;
/// Condition number beyond which a Gram matrix counts as singular.
pub const MAX_CONDITION: f64 = 1e12;

/// `H^H H` when `K <= M`, otherwise `H H^H`: the `T x T` Gram matrix that
/// carries the positive eigenvalues.
pub fn small_gram(h: &CMatrix) -> CMatrix {
    if h.ncols() <= h.nrows() {
        h.adjoint() * h
    } else {
        h * h.adjoint()
    }
}

/// Eigenvalues of a Hermitian matrix, or `None` if the solver fails or
/// misses the residual contract against `scale`.
pub fn hermitian_eigenvalues(g: &CMatrix, scale: f64) -> Option<Vec<f64>> {
    let eig = SymmetricEigen::try_new(g.clone(), 1e-15, 10_000)?;
    for (i, &l) in eig.eigenvalues.iter().enumerate() {
        let v = eig.eigenvectors.column(i);
        let r = (g * v - v * C64::from(l)).norm();
        if r > EIG_RESIDUAL_TOL * scale {
            return None;
        }
    }
    Some(eig.eigenvalues.iter().copied().collect())
}

/// Natural log-determinant of a Hermitian positive-definite matrix.
pub fn ln_det_hpd(a: &CMatrix) -> Option<f64> {
    let chol = Cholesky::new(a.clone())?;
    Some(chol.l_dirty().diagonal().iter().map(|d| 2.0 * d.re.ln()).sum())
}

pub fn inverse_hpd(a: &CMatrix) -> Option<CMatrix> {
    Cholesky::new(a.clone()).map(|c| c.inverse())
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn scaled_identity(n: usize, s: f64) -> CMatrix {
    CMatrix::identity(n, n) * C64::from(s)
}
