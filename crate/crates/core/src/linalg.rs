use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Eigenpairs of a symmetric matrix sorted by decreasing eigenvalue.
pub(crate) fn symmetric_eigen_desc(m: DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = m.nrows();
    let sym = (&m + m.transpose()) * 0.5;
    let eig = sym
        .try_symmetric_eigen(f64::EPSILON, 10_000)
        .ok_or(Error::EigenSolver)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::EigenSolver);
    }
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok((values, vectors))
}

/// Solution of a dense linear system with the ratio of smallest to largest
/// pivot of the LU factorization (a cheap singularity indicator).
pub(crate) fn solve_with_pivot_ratio(a: DMatrix<f64>, b: &DVector<f64>) -> (Option<DVector<f64>>, f64) {
    let lu = a.lu();
    let u = lu.u();
    let diag = u.diagonal().map(f64::abs);
    let max = diag.max();
    let ratio = if max > 0.0 { diag.min() / max } else { 0.0 };
    (lu.solve(b), ratio)
}
