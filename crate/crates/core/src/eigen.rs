//! Thin wrappers around the LAPACK-backed decompositions used throughout the crate.

use ndarray::{Array1, Array2};
use ndarray_linalg::{Eig, EigValsh, Eigh, SVD, UPLO};
use num_complex::Complex64;

use crate::error::Result;

/// Eigendecomposition of a real symmetric matrix.
/// Eigenvalues ascend; column `k` of the returned matrix is the eigenvector for eigenvalue `k`.
pub fn sym_eigen(mat: &Array2<f64>) -> Result<(Array1<f64>, Array2<f64>)> {
    let (vals, vecs) = mat.eigh(UPLO::Lower)?;
    Ok((vals, vecs))
}

/// Eigenvalues only, ascending, of a real symmetric matrix.
pub fn sym_eigenvalues(mat: &Array2<f64>) -> Result<Array1<f64>> {
    Ok(mat.eigvalsh(UPLO::Lower)?)
}

/// Complex eigenvalues of a general (non-symmetric) real matrix,
/// sorted by real part then imaginary part for deterministic output.
pub fn general_eigenvalues(mat: &Array2<f64>) -> Result<Vec<Complex64>> {
    let (vals, _) = mat.eig()?;
    let mut out: Vec<Complex64> = vals.to_vec();
    out.sort_by(|a, b| {
        a.re.partial_cmp(&b.re)
            .unwrap()
            .then(a.im.partial_cmp(&b.im).unwrap())
    });
    Ok(out)
}

/// Singular values (descending) and left singular vectors of a real matrix.
pub fn svd_left(mat: &Array2<f64>) -> Result<(Array2<f64>, Array1<f64>)> {
    let (u, s, _) = mat.svd(true, false)?;
    let u = u.expect("left singular vectors requested");
    Ok((u, s))
}

/// Singular values only, descending.
pub fn singular_values(mat: &Array2<f64>) -> Result<Array1<f64>> {
    let (_, s, _) = mat.svd(false, false)?;
    Ok(s)
}
