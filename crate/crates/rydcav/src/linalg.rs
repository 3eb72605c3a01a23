//! Small dense-matrix helpers shared by the physics modules.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

/// Largest entry magnitude.
pub fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Largest entry magnitude of the difference `a - b`.
pub fn max_abs_diff(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    debug_assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// `[a, b] = ab - ba`.
pub fn commutator(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    a * b - b * a
}

/// Hermiticity residual `max|M - M^dag|`.
pub fn hermiticity_residual(m: &DMatrix<C64>) -> f64 {
    let adj = m.adjoint();
    max_abs_diff(m, &adj)
}

/// Eigendecomposition of a Hermitian matrix: real eigenvalues and the unitary
/// matrix of eigenvectors (column k pairs with eigenvalue k).
pub fn hermitian_eigen(m: &DMatrix<C64>) -> (DVector<f64>, DMatrix<C64>) {
    let se = m.clone().symmetric_eigen();
    (se.eigenvalues, se.eigenvectors)
}

/// Dense matrix exponential.
pub fn expm(m: &DMatrix<C64>) -> DMatrix<C64> {
    m.exp()
}
