//! Small dense linear-algebra helpers shared across the crate.
//!
//! Everything operates on `nalgebra` dynamic matrices with `Complex64`
//! entries; covariance matrices in this problem never exceed a few dozen
//! rows, so dense factorizations are the right tool throughout.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;
pub type RMatrix = DMatrix<f64>;
pub type RVector = DVector<f64>;

/// Maximum absolute deviation from Hermitian symmetry, `max |A - A^H|`.
pub fn hermitian_defect(a: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0f64;
    for p in 0..n {
        for q in p..n {
            let d = (a[(p, q)] - a[(q, p)].conj()).norm();
            if d > worst {
                worst = d;
            }
        }
    }
    worst
}

/// Errors unless `a` is square and Hermitian within `tol` (absolute).
pub fn require_hermitian(a: &CMatrix, tol: f64) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(Error::InvalidParameter(format!(
            "expected a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let defect = hermitian_defect(a);
    if defect > tol {
        return Err(Error::NotHermitian(defect));
    }
    Ok(())
}

/// Replaces `a` with its Hermitian part `(A + A^H)/2`, forcing real diagonal.
pub fn hermitianize(a: &mut CMatrix) {
    let n = a.nrows();
    for p in 0..n {
        a[(p, p)] = Complex64::new(a[(p, p)].re, 0.0);
        for q in (p + 1)..n {
            let avg = 0.5 * (a[(p, q)] + a[(q, p)].conj());
            a[(p, q)] = avg;
            a[(q, p)] = avg.conj();
        }
    }
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
///
/// Returns `(eigenvalues, eigenvectors)` with eigenvectors in matching
/// column order, so `A = V diag(vals) V^H`.
pub fn hermitian_eigen(a: &CMatrix) -> (RVector, CMatrix) {
    let eig = a.clone().symmetric_eigen();
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let vals = RVector::from_fn(n, |i, _| eig.eigenvalues[order[i]]);
    let mut vecs = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vecs.set_column(dst, &eig.eigenvectors.column(src));
    }
    (vals, vecs)
}

/// Eigenvalues only, ascending.
pub fn hermitian_eigenvalues(a: &CMatrix) -> RVector {
    let mut vals = a.clone().symmetric_eigen().eigenvalues;
    vals.as_mut_slice().sort_by(f64::total_cmp);
    vals
}

/// Rebuilds `V diag(vals) V^H`, re-Hermitianized against roundoff.
pub fn assemble_hermitian(vals: &RVector, vecs: &CMatrix) -> CMatrix {
    let diag = CMatrix::from_diagonal(&vals.map(|x| Complex64::new(x, 0.0)));
    let mut out = vecs * diag * vecs.adjoint();
    hermitianize(&mut out);
    out
}

/// Cholesky of a Hermitian positive definite matrix.
pub fn cholesky(a: &CMatrix) -> Result<Cholesky<Complex64, Dyn>> {
    Cholesky::new(a.clone()).ok_or(Error::SingularMatrix)
}

/// Restriction of a square matrix to the rows and columns in `idx`.
pub fn restrict(a: &CMatrix, idx: &[usize]) -> CMatrix {
    CMatrix::from_fn(idx.len(), idx.len(), |r, c| a[(idx[r], idx[c])])
}

/// Restriction of a vector to the entries in `idx`.
pub fn restrict_vector(v: &CVector, idx: &[usize]) -> CVector {
    CVector::from_fn(idx.len(), |r, _| v[idx[r]])
}

/// Real part of the quadratic form `w^H A w`.
pub fn quadratic_form(a: &CMatrix, w: &CVector) -> f64 {
    (w.adjoint() * a * w)[(0, 0)].re
}
