//! Dense complex linear algebra: structured matrix types, operator norms,
//! spectral decompositions and the functional calculus built on them.

mod backend;
mod dense;
mod schur;

use std::cmp::Ordering;
use std::ops::Deref;

use num_complex::Complex;
use num_traits::Zero;
use rand::Rng;
use rand_distr::StandardNormal;

pub use backend::DenseBackend;
pub use dense::{commutator, SquareMatrix};

use crate::error::{Error, Result};
use crate::scalar::{czero, Cx, Real};

/// Construction and accuracy tolerances.
///
/// For `f64` these are `hermitian = unitary = 1e-9` and `eig = 1e-11`.
/// Coarser scalar types get the larger of those and a small multiple of
/// their machine epsilon.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances<T> {
    pub hermitian: T,
    pub unitary: T,
    pub eig: T,
}

impl<T: Real> Tolerances<T> {
    pub fn for_scalar() -> Self {
        let eps = T::epsilon();
        Self {
            hermitian: T::lit(1e-9).max(eps * T::lit(1e3)),
            unitary: T::lit(1e-9).max(eps * T::lit(1e3)),
            eig: T::lit(1e-11).max(eps * T::lit(10.0)),
        }
    }
}

impl<T: Real> Default for Tolerances<T> {
    fn default() -> Self {
        Self::for_scalar()
    }
}

/// Operator (spectral) norm: the largest singular value.
pub fn operator_norm<T: Real>(m: &SquareMatrix<T>) -> Result<T> {
    m.check_finite()?;
    if m.is_diagonal() {
        return Ok(m.diagonal().iter().map(|z| z.norm()).fold(T::zero(), T::max));
    }
    let gram = m.adjoint_matmul(m)?.hermitian_part();
    let (vals, _) = T::hermitian_eig(&gram, false)?;
    Ok(vals.last().copied().unwrap_or_else(T::zero).max(T::zero()).sqrt())
}

/// Operator norm of a matrix known to be Hermitian: the spectral radius.
pub fn hermitian_operator_norm<T: Real>(h: &HermitianMatrix<T>) -> Result<T> {
    let vals = h.eigenvalues()?;
    Ok(vals.iter().map(|x| x.abs()).fold(T::zero(), T::max))
}

/// Operator norm bound that is exact for Frobenius-small matrices and falls
/// back to the spectral norm otherwise.
fn defect_exceeds<T: Real>(m: &SquareMatrix<T>, tol: T) -> Result<Option<T>> {
    let frob = m.frobenius_norm();
    if frob <= tol {
        return Ok(None);
    }
    let op = operator_norm(m)?;
    Ok((op > tol).then_some(op))
}

/// Self-adjoint matrix. The stored data is exactly Hermitian.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix<T>(SquareMatrix<T>);

impl<T: Real> HermitianMatrix<T> {
    pub fn new(m: SquareMatrix<T>) -> Result<Self> {
        Self::with_tolerance(m, Tolerances::for_scalar().hermitian)
    }

    /// Checks `‖M − M*‖ ≤ tol` and stores the Hermitian part.
    pub fn with_tolerance(m: SquareMatrix<T>, tol: T) -> Result<Self> {
        m.check_finite()?;
        let skew = m.sub_checked(&m.adjoint())?;
        if let Some(defect) = defect_exceeds(&skew, tol)? {
            return Err(Error::NotHermitian {
                defect: defect.to_f64_lossy(),
                tol: tol.to_f64_lossy(),
            });
        }
        Ok(Self(m.hermitian_part()))
    }

    pub fn from_real_diag(diag: &[T]) -> Self {
        Self(SquareMatrix::from_real_diag(diag))
    }

    pub fn matrix(&self) -> &SquareMatrix<T> {
        &self.0
    }

    pub fn into_inner(self) -> SquareMatrix<T> {
        self.0
    }

    /// Ascending real eigenvalues without eigenvectors.
    pub fn eigenvalues(&self) -> Result<Vec<T>> {
        Ok(T::hermitian_eig(&self.0, false)?.0)
    }

    pub fn trace_real(&self) -> T {
        self.0.trace().re
    }
}

impl<T> Deref for HermitianMatrix<T> {
    type Target = SquareMatrix<T>;

    fn deref(&self) -> &SquareMatrix<T> {
        &self.0
    }
}

/// Unitary matrix, checked at construction.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitaryMatrix<T>(SquareMatrix<T>);

impl<T: Real> UnitaryMatrix<T> {
    pub fn new(m: SquareMatrix<T>) -> Result<Self> {
        Self::with_tolerance(m, Tolerances::for_scalar().unitary)
    }

    /// Checks `‖U*U − I‖ ≤ tol`.
    pub fn with_tolerance(m: SquareMatrix<T>, tol: T) -> Result<Self> {
        m.check_finite()?;
        let defect = m
            .adjoint_matmul(&m)?
            .sub_checked(&SquareMatrix::identity(m.dim()))?;
        if let Some(defect) = defect_exceeds(&defect, tol)? {
            return Err(Error::NotUnitary {
                defect: defect.to_f64_lossy(),
                tol: tol.to_f64_lossy(),
            });
        }
        Ok(Self(m))
    }

    pub(crate) fn new_unchecked(m: SquareMatrix<T>) -> Self {
        Self(m)
    }

    pub fn identity(dim: usize) -> Self {
        Self(SquareMatrix::identity(dim))
    }

    /// Diagonal unitary with the given unit-modulus entries.
    pub fn from_phases(phases: &[Cx<T>]) -> Result<Self> {
        Self::new(SquareMatrix::from_diag(phases))
    }

    pub fn matrix(&self) -> &SquareMatrix<T> {
        &self.0
    }

    pub fn into_inner(self) -> SquareMatrix<T> {
        self.0
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn compose(&self, other: &Self) -> Result<Self> {
        Ok(Self(self.0.matmul(&other.0)?))
    }

    /// `W M W*`.
    pub fn conjugate(&self, m: &SquareMatrix<T>) -> Result<SquareMatrix<T>> {
        self.0.matmul(m)?.matmul(&self.0.adjoint())
    }

    pub fn kron(&self, other: &Self) -> Self {
        Self(self.0.kron(&other.0))
    }
}

impl<T> Deref for UnitaryMatrix<T> {
    type Target = SquareMatrix<T>;

    fn deref(&self) -> &SquareMatrix<T> {
        &self.0
    }
}

/// `M = V Λ V*` with orthonormal eigenvector columns `V`.
///
/// `L` is `T` for Hermitian input and `Cx<T>` (unit modulus) for unitary
/// input. Eigenvalues are sorted ascending by real part, then imaginary part.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition<T, L> {
    pub eigenvalues: Vec<L>,
    pub eigenvectors: UnitaryMatrix<T>,
}

impl<T: Real, L: Copy> SpectralDecomposition<T, L> {
    /// `V · diag(w) · V*`.
    pub fn synthesize(&self, weights: impl Fn(L) -> Cx<T>) -> SquareMatrix<T> {
        let w: Vec<Cx<T>> = self.eigenvalues.iter().map(|&l| weights(l)).collect();
        synthesize(&self.eigenvectors, &w)
    }

    /// `tr(V · diag(w) · V*)` without forming the matrix.
    pub fn trace_of(&self, weights: impl Fn(L) -> Cx<T>) -> Cx<T> {
        let v = &self.eigenvectors;
        let n = v.dim();
        self.eigenvalues
            .iter()
            .enumerate()
            .fold(czero(), |acc, (k, &l)| {
                let w = weights(l);
                if w.is_zero() {
                    return acc;
                }
                let col_norm: T = (0..n).map(|i| v[(i, k)].norm_sqr()).sum();
                acc + w * col_norm
            })
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }
}

fn synthesize<T: Real>(v: &SquareMatrix<T>, w: &[Cx<T>]) -> SquareMatrix<T> {
    let n = v.dim();
    let mut out = SquareMatrix::zeros(n);
    let mut nz: Vec<(usize, Cx<T>)> = Vec::with_capacity(n);
    for (k, &wk) in w.iter().enumerate() {
        if wk.is_zero() {
            continue;
        }
        nz.clear();
        nz.extend((0..n).map(|i| (i, v[(i, k)])).filter(|(_, z)| !z.is_zero()));
        for &(i, vi) in &nz {
            let a = vi * wk;
            for &(j, vj) in &nz {
                out[(i, j)] = out[(i, j)] + a * vj.conj();
            }
        }
    }
    out
}

/// Eigendecomposition of a Hermitian matrix.
pub fn eig_hermitian<T: Real>(h: &HermitianMatrix<T>) -> Result<SpectralDecomposition<T, T>> {
    let (values, vectors) = T::hermitian_eig(h.matrix(), true)?;
    let vectors = vectors.ok_or_else(|| Error::Numerical("eigenvectors not produced".into()))?;
    Ok(SpectralDecomposition {
        eigenvalues: values,
        eigenvectors: UnitaryMatrix::new_unchecked(vectors),
    })
}

/// Eigendecomposition of a unitary (more generally, normal) matrix through
/// its complex Schur form. Fails if the Schur form is not diagonal, which
/// happens exactly when the input is not normal.
pub fn eig_unitary<T: Real>(u: &UnitaryMatrix<T>) -> Result<SpectralDecomposition<T, Cx<T>>> {
    let tol = Tolerances::<T>::for_scalar();
    let n = u.dim();
    let (t, z) = schur::complex_schur(u.matrix())?;
    let mut strict_upper = T::zero();
    for i in 0..n {
        for j in i + 1..n {
            strict_upper = strict_upper + t[(i, j)].norm_sqr();
        }
    }
    let strict_upper = strict_upper.sqrt();
    let allowed = tol.eig * T::from_usize_lossy(n) * T::lit(100.0);
    if strict_upper > allowed {
        return Err(Error::Numerical(format!(
            "Schur form of a supposedly normal matrix has off-diagonal mass {:e}",
            strict_upper.to_f64_lossy()
        )));
    }
    let values: Vec<Cx<T>> = t
        .diagonal()
        .into_iter()
        .map(|l| {
            let r = l.norm();
            if r.is_zero() {
                l
            } else {
                l / r
            }
        })
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| cmp_complex(values[a], values[b]));
    let sorted: Vec<Cx<T>> = order.iter().map(|&k| values[k]).collect();
    let vectors = SquareMatrix::from_fn(n, |i, j| z[(i, order[j])]);
    Ok(SpectralDecomposition {
        eigenvalues: sorted,
        eigenvectors: UnitaryMatrix::new_unchecked(vectors),
    })
}

fn cmp_complex<T: Real>(a: Cx<T>, b: Cx<T>) -> Ordering {
    a.re.partial_cmp(&b.re)
        .unwrap_or(Ordering::Equal)
        .then(a.im.partial_cmp(&b.im).unwrap_or(Ordering::Equal))
}

/// `φ(H)` for a real function `φ`.
pub fn apply_function_hermitian<T: Real>(h: &HermitianMatrix<T>, phi: impl Fn(T) -> T) -> Result<SquareMatrix<T>> {
    let dec = eig_hermitian(h)?;
    Ok(dec.synthesize(|l| Complex::new(phi(l), T::zero())))
}

/// `φ(H)` for a complex-valued function of the real spectrum, e.g. `e^{iH}`.
pub fn apply_complex_function_hermitian<T: Real>(
    h: &HermitianMatrix<T>,
    phi: impl Fn(T) -> Cx<T>,
) -> Result<SquareMatrix<T>> {
    let dec = eig_hermitian(h)?;
    Ok(dec.synthesize(phi))
}

/// `k(U)` for a function `k` on the unit circle.
pub fn apply_function_unitary<T: Real>(u: &UnitaryMatrix<T>, k: impl Fn(Cx<T>) -> Cx<T>) -> Result<SquareMatrix<T>> {
    let dec = eig_unitary(u)?;
    Ok(dec.synthesize(k))
}

/// Random unitary from Gram-Schmidt on a complex Gaussian matrix.
pub fn random_unitary<T: Real, R: Rng + ?Sized>(n: usize, rng: &mut R) -> UnitaryMatrix<T> {
    let cols = orthonormal_columns::<T, R>(n, n, rng);
    UnitaryMatrix::new_unchecked(SquareMatrix::from_fn(n, |i, j| cols[j][i]))
}

/// `count` orthonormal random vectors in `C^n`, `count <= n`.
pub fn orthonormal_columns<T: Real, R: Rng + ?Sized>(n: usize, count: usize, rng: &mut R) -> Vec<Vec<Cx<T>>> {
    assert!(count <= n, "cannot fit {count} orthonormal vectors in dimension {n}");
    let mut cols: Vec<Vec<Cx<T>>> = Vec::with_capacity(count);
    while cols.len() < count {
        let mut v: Vec<Cx<T>> = (0..n)
            .map(|_| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex::new(T::lit(re), T::lit(im))
            })
            .collect();
        // two passes of modified Gram-Schmidt
        for _ in 0..2 {
            for c in &cols {
                let proj = c.iter().zip(&v).fold(czero::<T>(), |acc, (a, b)| acc + a.conj() * b);
                for (vi, ci) in v.iter_mut().zip(c) {
                    *vi = *vi - proj * ci;
                }
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
        if norm > T::lit(1e-3) {
            cols.push(v.into_iter().map(|z| z / norm).collect());
        }
    }
    cols
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_unitary_is_unitary() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let w = random_unitary::<f64, _>(9, &mut rng);
        assert!(UnitaryMatrix::new(w.matrix().clone()).is_ok());
        assert!((w.determinant().norm() - 1.0).abs() < 1e-12);
    }

    fn c(re: f64, im: f64) -> Cx<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn tolerances_for_f64_match_defaults() {
        let t = Tolerances::<f64>::for_scalar();
        assert_eq!(t.hermitian, 1e-9);
        assert_eq!(t.unitary, 1e-9);
        assert_eq!(t.eig, 1e-11);
        let t32 = Tolerances::<f32>::for_scalar();
        assert!(t32.hermitian > 1e-5);
    }

    #[test]
    fn operator_norm_diagonal_and_zero() {
        let d = SquareMatrix::<f64>::from_real_diag(&[1.0, 2.0, 3.0]);
        assert!((operator_norm(&d).unwrap() - 3.0).abs() < 1e-15);
        assert_eq!(operator_norm(&SquareMatrix::<f64>::zeros(4)).unwrap(), 0.0);
    }

    #[test]
    fn operator_norm_rejects_nan() {
        let mut m = SquareMatrix::<f64>::identity(2);
        m[(0, 1)] = c(f64::INFINITY, 0.0);
        assert!(matches!(operator_norm(&m), Err(Error::InvalidMatrix(_))));
    }

    #[test]
    fn hermitian_check() {
        let m = SquareMatrix::<f64>::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]).unwrap();
        assert!(matches!(HermitianMatrix::new(m), Err(Error::NotHermitian { .. })));
        let ok = SquareMatrix::<f64>::from_real_rows(&[&[0.0, 1.0], &[1.0 + 1e-12, 0.0]]).unwrap();
        let h = HermitianMatrix::new(ok).unwrap();
        assert_eq!(h[(0, 1)], h[(1, 0)].conj());
    }

    #[test]
    fn unitary_check() {
        let m = SquareMatrix::<f64>::from_real_rows(&[&[1.0, 1.0], &[0.0, 1.0]]).unwrap();
        assert!(matches!(UnitaryMatrix::new(m), Err(Error::NotUnitary { .. })));
    }

    #[test]
    fn eig_hermitian_trivial_cases() {
        let d = eig_hermitian(&HermitianMatrix::from_real_diag(&[0.0, 1.0])).unwrap();
        assert_eq!(d.eigenvalues, vec![0.0, 1.0]);
        assert_eq!(*d.eigenvectors.matrix(), SquareMatrix::identity(2));

        let x = SquareMatrix::<f64>::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap();
        let d = eig_hermitian(&HermitianMatrix::new(x).unwrap()).unwrap();
        assert!((d.eigenvalues[0] + 1.0).abs() < 1e-15);
        assert!((d.eigenvalues[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn function_calculus_trivial_functions() {
        let h = HermitianMatrix::new(
            SquareMatrix::<f64>::from_real_rows(&[&[2.0, 0.5], &[0.5, -1.0]]).unwrap(),
        )
        .unwrap();
        let id = apply_function_hermitian(&h, |x| x).unwrap();
        assert!((&id - h.matrix()).max_abs() < 1e-12);
        let one = apply_function_hermitian(&h, |_| 1.0).unwrap();
        assert!((&one - &SquareMatrix::identity(2)).max_abs() < 1e-12);
    }

    #[test]
    fn eig_unitary_rejects_non_normal_input() {
        // upper-triangular Jordan-like block slipped past a loose tolerance
        let m = SquareMatrix::<f64>::from_real_rows(&[&[1.0, 0.5], &[0.0, 1.0]]).unwrap();
        let u = UnitaryMatrix::with_tolerance(m, 10.0).unwrap();
        assert!(matches!(eig_unitary(&u), Err(Error::Numerical(_))));
    }

    #[test]
    fn unitary_eigenvalues_sorted_and_unit_modulus() {
        let phases = [c(0.0, 1.0), c(-1.0, 0.0), c(1.0, 0.0), c(0.0, -1.0)];
        let u = UnitaryMatrix::from_phases(&phases).unwrap();
        let d = eig_unitary(&u).unwrap();
        let re: Vec<f64> = d.eigenvalues.iter().map(|z| z.re).collect();
        assert_eq!(re, vec![-1.0, 0.0, 0.0, 1.0]);
        assert!(d.eigenvalues[1].im < d.eigenvalues[2].im);
    }
}
