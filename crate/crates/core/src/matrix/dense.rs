use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::scalar::{cone, czero, Cx, Real};

/// Dense square complex matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct SquareMatrix<T> {
    dim: usize,
    data: Vec<Cx<T>>,
}

impl<T: Real> SquareMatrix<T> {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "matrix dimension must be positive");
        Self {
            dim,
            data: vec![czero(); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = cone();
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Cx<T>) -> Self {
        assert!(dim >= 1, "matrix dimension must be positive");
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        Self { dim, data }
    }

    pub fn from_diag(diag: &[Cx<T>]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    pub fn from_real_diag(diag: &[T]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = Complex::new(d, T::zero());
        }
        m
    }

    /// Builds a matrix from row-major data, rejecting non-finite entries.
    pub fn from_row_major(dim: usize, data: Vec<Cx<T>>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidMatrix("dimension must be positive".into()));
        }
        if data.len() != dim * dim {
            return Err(Error::Dimension {
                expected: dim * dim,
                found: data.len(),
            });
        }
        let m = Self { dim, data };
        m.check_finite()?;
        Ok(m)
    }

    pub fn from_rows(rows: &[Vec<Cx<T>>]) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::Dimension {
                    expected: dim,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::from_row_major(dim, data)
    }

    /// Real-valued convenience constructor, mostly for tests and examples.
    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let rows: Vec<Vec<Cx<T>>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| Complex::new(T::lit(x), T::zero())).collect())
            .collect();
        Self::from_rows(&rows)
    }

    /// 2×2 block matrix `[[a, b], [c, d]]` with square blocks of equal size.
    pub fn from_blocks(a: &Self, b: &Self, c: &Self, d: &Self) -> Result<Self> {
        let n = a.dim;
        for m in [b, c, d] {
            if m.dim != n {
                return Err(Error::Dimension {
                    expected: n,
                    found: m.dim,
                });
            }
        }
        let mut out = Self::zeros(2 * n);
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] = a[(i, j)];
                out[(i, j + n)] = b[(i, j)];
                out[(i + n, j)] = c[(i, j)];
                out[(i + n, j + n)] = d[(i, j)];
            }
        }
        Ok(out)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn as_slice(&self) -> &[Cx<T>] {
        &self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[Cx<T>] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn check_finite(&self) -> Result<()> {
        match self
            .data
            .iter()
            .position(|z| !(z.re.is_finite() && z.im.is_finite()))
        {
            Some(k) => Err(Error::InvalidMatrix(format!(
                "non-finite entry at ({}, {})",
                k / self.dim,
                k % self.dim
            ))),
            None => Ok(()),
        }
    }

    pub fn adjoint(&self) -> Self {
        let n = self.dim;
        Self::from_fn(n, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        let n = self.dim;
        Self::from_fn(n, |i, j| self[(j, i)])
    }

    pub fn trace(&self) -> Cx<T> {
        (0..self.dim).fold(czero(), |acc, i| acc + self[(i, i)])
    }

    pub fn diagonal(&self) -> Vec<Cx<T>> {
        (0..self.dim).map(|i| self[(i, i)]).collect()
    }

    pub fn scale(&self, s: Cx<T>) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn scale_real(&self, s: T) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> T {
        self.data
            .iter()
            .map(|z| z.norm())
            .fold(T::zero(), |a, b| a.max(b))
    }

    /// `tr(self · other)` without forming the product.
    pub fn trace_of_product(&self, other: &Self) -> Result<Cx<T>> {
        self.check_same_dim(other)?;
        let n = self.dim;
        let mut acc = czero();
        for i in 0..n {
            for j in 0..n {
                acc = acc + self[(i, j)] * other[(j, i)];
            }
        }
        Ok(acc)
    }

    /// `(self + self*) / 2`.
    pub fn hermitian_part(&self) -> Self {
        let half = T::lit(0.5);
        let n = self.dim;
        Self::from_fn(n, |i, j| (self[(i, j)] + self[(j, i)].conj()) * half)
    }

    /// `(self − self*) / 2i`, Hermitian.
    pub fn skew_part(&self) -> Self {
        let n = self.dim;
        let half_i = Complex::new(T::zero(), T::lit(-0.5));
        Self::from_fn(n, |i, j| (self[(i, j)] - self[(j, i)].conj()) * half_i)
    }

    /// Kronecker product `self ⊗ other`; the index of `self` is the outer one.
    pub fn kron(&self, other: &Self) -> Self {
        let (a, b) = (self.dim, other.dim);
        Self::from_fn(a * b, |i, j| self[(i / b, j / b)] * other[(i % b, j % b)])
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        self.check_same_dim(other)?;
        let n = self.dim;
        let mut out = vec![czero::<T>(); n * n];
        for i in 0..n {
            let out_row = &mut out[i * n..(i + 1) * n];
            for k in 0..n {
                let a = self.data[i * n + k];
                if a.is_zero() {
                    continue;
                }
                let b_row = &other.data[k * n..(k + 1) * n];
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o = *o + a * b;
                }
            }
        }
        Ok(Self { dim: n, data: out })
    }

    /// `self* · other` without materialising the adjoint.
    pub fn adjoint_matmul(&self, other: &Self) -> Result<Self> {
        self.check_same_dim(other)?;
        let n = self.dim;
        let mut out = vec![czero::<T>(); n * n];
        for k in 0..n {
            let a_row = &self.data[k * n..(k + 1) * n];
            let b_row = &other.data[k * n..(k + 1) * n];
            for (i, a) in a_row.iter().enumerate() {
                let a = a.conj();
                if a.is_zero() {
                    continue;
                }
                let out_row = &mut out[i * n..(i + 1) * n];
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o = *o + a * b;
                }
            }
        }
        Ok(Self { dim: n, data: out })
    }

    pub fn add_checked(&self, other: &Self) -> Result<Self> {
        self.check_same_dim(other)?;
        Ok(self.zip_with(other, |a, b| a + b))
    }

    pub fn sub_checked(&self, other: &Self) -> Result<Self> {
        self.check_same_dim(other)?;
        Ok(self.zip_with(other, |a, b| a - b))
    }

    fn zip_with(&self, other: &Self, f: impl Fn(Cx<T>, Cx<T>) -> Cx<T>) -> Self {
        Self {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub(crate) fn check_same_dim(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                found: other.dim,
            });
        }
        Ok(())
    }

    pub fn is_diagonal(&self) -> bool {
        let n = self.dim;
        (0..n).all(|i| (0..n).all(|j| i == j || self[(i, j)].is_zero()))
    }

    /// Determinant by LU factorisation with partial pivoting.
    pub fn determinant(&self) -> Cx<T> {
        let n = self.dim;
        let mut a = self.data.clone();
        let mut det = Complex::new(T::one(), T::zero());
        for k in 0..n {
            let pivot = (k..n)
                .max_by(|&x, &y| {
                    a[x * n + k]
                        .norm()
                        .partial_cmp(&a[y * n + k].norm())
                        .unwrap_or(std::cmp::Ordering::Equal)
                })
                .expect("non-empty range");
            if a[pivot * n + k].is_zero() {
                return czero();
            }
            if pivot != k {
                for j in 0..n {
                    a.swap(k * n + j, pivot * n + j);
                }
                det = -det;
            }
            let akk = a[k * n + k];
            det = det * akk;
            for i in k + 1..n {
                let factor = a[i * n + k] / akk;
                if factor.is_zero() {
                    continue;
                }
                for j in k + 1..n {
                    let upd = factor * a[k * n + j];
                    a[i * n + j] = a[i * n + j] - upd;
                }
            }
        }
        det
    }

    /// Converts the entries to another scalar type.
    pub fn cast<U: Real>(&self) -> SquareMatrix<U> {
        SquareMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .map(|z| Complex::new(U::lit(z.re.to_f64_lossy()), U::lit(z.im.to_f64_lossy())))
                .collect(),
        }
    }
}

impl<T> Index<(usize, usize)> for SquareMatrix<T> {
    type Output = Cx<T>;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Cx<T> {
        &self.data[i * self.dim + j]
    }
}

impl<T> IndexMut<(usize, usize)> for SquareMatrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Cx<T> {
        &mut self.data[i * self.dim + j]
    }
}

// Operator impls panic on dimension mismatch; use the `*_checked` methods
// where the dimensions come from user input.

impl<T: Real> Mul for &SquareMatrix<T> {
    type Output = SquareMatrix<T>;

    fn mul(self, rhs: Self) -> SquareMatrix<T> {
        self.matmul(rhs).expect("matrix product dimension mismatch")
    }
}

impl<T: Real> Add for &SquareMatrix<T> {
    type Output = SquareMatrix<T>;

    fn add(self, rhs: Self) -> SquareMatrix<T> {
        self.add_checked(rhs).expect("matrix sum dimension mismatch")
    }
}

impl<T: Real> Sub for &SquareMatrix<T> {
    type Output = SquareMatrix<T>;

    fn sub(self, rhs: Self) -> SquareMatrix<T> {
        self.sub_checked(rhs)
            .expect("matrix difference dimension mismatch")
    }
}

impl<T: Real> Neg for &SquareMatrix<T> {
    type Output = SquareMatrix<T>;

    fn neg(self) -> SquareMatrix<T> {
        self.scale_real(-T::one())
    }
}

/// `AB − BA`.
pub fn commutator<T: Real>(a: &SquareMatrix<T>, b: &SquareMatrix<T>) -> Result<SquareMatrix<T>> {
    let ab = a.matmul(b)?;
    let ba = b.matmul(a)?;
    ab.sub_checked(&ba)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn determinant_of_permutation_and_product() {
        let p = SquareMatrix::<f64>::from_real_rows(&[&[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0], &[1.0, 0.0, 0.0]]).unwrap();
        assert!((p.determinant() - Complex::new(1.0, 0.0)).norm() < 1e-15);
        let swap = SquareMatrix::<f64>::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap();
        assert!((swap.determinant() + Complex::new(1.0, 0.0)).norm() < 1e-15);
        let a = SquareMatrix::from_fn(4, |i, j| Complex::new((i + 2 * j) as f64 * 0.3, (i as f64 - j as f64).sin()));
        let b = SquareMatrix::from_fn(4, |i, j| Complex::new(((i * j) as f64).cos(), 0.1 * i as f64));
        let lhs = (&a * &b).determinant();
        let rhs = a.determinant() * b.determinant();
        assert!((lhs - rhs).norm() < 1e-10 * rhs.norm().max(1.0));
        assert_eq!(SquareMatrix::<f64>::zeros(3).determinant(), Complex::new(0.0, 0.0));
    }

    fn c(re: f64, im: f64) -> Cx<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn commutator_of_identity_vanishes() {
        let b = SquareMatrix::from_fn(3, |i, j| c(i as f64, j as f64 - 1.0));
        let z = commutator(&SquareMatrix::identity(3), &b).unwrap();
        assert_eq!(z.max_abs(), 0.0);
    }

    #[test]
    fn commutator_hand_computed() {
        let a = SquareMatrix::<f64>::from_real_rows(&[&[1.0, 0.0], &[0.0, -1.0]]).unwrap();
        let b = SquareMatrix::<f64>::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap();
        let z = commutator(&a, &b).unwrap();
        let expected = SquareMatrix::<f64>::from_real_rows(&[&[0.0, 2.0], &[-2.0, 0.0]]).unwrap();
        assert_eq!(z, expected);
    }

    #[test]
    fn commutator_dimension_mismatch() {
        let err = commutator(&SquareMatrix::<f64>::identity(2), &SquareMatrix::identity(3));
        assert!(matches!(err, Err(Error::Dimension { .. })));
    }

    #[test]
    fn rejects_non_finite() {
        let err = SquareMatrix::from_row_major(1, vec![c(f64::NAN, 0.0)]);
        assert!(matches!(err, Err(Error::InvalidMatrix(_))));
    }

    #[test]
    fn adjoint_matmul_matches_explicit() {
        let a = SquareMatrix::from_fn(4, |i, j| c((i * 3 + j) as f64 * 0.1, (i as f64 - j as f64) * 0.2));
        let b = SquareMatrix::from_fn(4, |i, j| c((i + j) as f64 * 0.3, 1.0 / (1.0 + (i * j) as f64)));
        let lhs = a.adjoint_matmul(&b).unwrap();
        let rhs = &a.adjoint() * &b;
        assert!((&lhs - &rhs).max_abs() < 1e-14);
    }

    #[test]
    fn kron_block_layout() {
        let a = SquareMatrix::<f64>::from_real_rows(&[&[1.0, 2.0], &[3.0, 4.0]]).unwrap();
        let i2 = SquareMatrix::identity(2);
        let k = a.kron(&i2);
        assert_eq!(k[(0, 2)], c(2.0, 0.0));
        assert_eq!(k[(1, 3)], c(2.0, 0.0));
        assert_eq!(k[(0, 3)], c(0.0, 0.0));
        assert_eq!(k[(3, 1)], c(3.0, 0.0));
    }

    #[test]
    fn trace_of_product_matches_product_trace() {
        let a = SquareMatrix::from_fn(5, |i, j| c((i as f64).sin() + j as f64, (j as f64).cos()));
        let b = SquareMatrix::from_fn(5, |i, j| c(i as f64 - 2.0 * j as f64, 0.5));
        let t1 = a.trace_of_product(&b).unwrap();
        let t2 = (&a * &b).trace();
        assert!((t1 - t2).norm() < 1e-12);
    }
}
