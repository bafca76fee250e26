//! Column-wise reshaping, vectorisation and Kronecker helpers.

use super::matrix::DenseMatrix;
use crate::error::{Error, Result};

/// `im_{m,n}(x)`: entry `(i, j)` is `x[j*m + i]`.
pub fn columnwise_reshape(x: &[f64], m: usize, n: usize) -> Result<DenseMatrix> {
    if x.len() != m * n {
        return Err(Error::shape(format!(
            "vector of length {} cannot be reshaped to {m}x{n}",
            x.len()
        )));
    }
    DenseMatrix::from_col_major(m, n, x.to_vec())
}

/// Column-major stacking, the inverse of [`columnwise_reshape`].
pub fn vectorize(x: &DenseMatrix) -> Vec<f64> {
    x.data().to_vec()
}

/// Dense Kronecker product `A ⊗ B`.
pub fn kron(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    let (p, q) = b.shape();
    DenseMatrix::from_fn(a.rows() * p, a.cols() * q, |i, j| {
        a.get(i / p, j / q) * b.get(i % p, j % q)
    })
}

/// `im_{m,n}(diag(A ⊗ B)) = diag(B) diag(A)ᵀ` for diagonal `A` (n×n) and `B` (m×m).
pub fn kron_diag_image(diag_a: &[f64], diag_b: &[f64]) -> DenseMatrix {
    DenseMatrix::from_fn(diag_b.len(), diag_a.len(), |i, j| diag_b[i] * diag_a[j])
}
