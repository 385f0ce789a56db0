//! Hermitian eigensolver, delegated to nalgebra for each supported scalar.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex;

use super::dense::SquareMatrix;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Iteration cap handed to nalgebra, per matrix dimension.
const ITERS_PER_DIM: usize = 200;

/// Hermitian eigendecomposition for a scalar type. Implemented for `f32`
/// and `f64` on top of nalgebra.
pub trait DenseBackend: Sized {
    /// Eigenvalues (ascending) and, optionally, orthonormal eigenvectors as
    /// matrix columns. Only the lower triangle of `m` is read.
    fn hermitian_eig(m: &SquareMatrix<Self>, want_vectors: bool) -> Result<(Vec<Self>, Option<SquareMatrix<Self>>)>;
}

macro_rules! dense_backend {
    ($t:ty) => {
        impl DenseBackend for $t {
            fn hermitian_eig(
                m: &SquareMatrix<$t>,
                want_vectors: bool,
            ) -> Result<(Vec<$t>, Option<SquareMatrix<$t>>)> {
                let n = m.dim();
                let a = to_nalgebra(m);
                if !want_vectors {
                    let mut values: Vec<$t> = a.symmetric_eigenvalues().iter().copied().collect();
                    values.sort_by(|x, y| x.total_cmp(y));
                    return Ok((values, None));
                }
                let eig = SymmetricEigen::try_new(a, <$t>::EPSILON, ITERS_PER_DIM * n.max(1))
                    .ok_or_else(|| Error::Numerical(format!("Hermitian eigensolver did not converge (n = {n})")))?;
                let mut order: Vec<usize> = (0..n).collect();
                order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
                let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
                let vectors = SquareMatrix::from_fn(n, |i, j| eig.eigenvectors[(i, order[j])]);
                Ok((values, Some(vectors)))
            }
        }
    };
}

dense_backend!(f32);
dense_backend!(f64);

fn to_nalgebra<T: Real>(m: &SquareMatrix<T>) -> DMatrix<Complex<T>> {
    DMatrix::from_row_slice(m.dim(), m.dim(), m.as_slice())
}
