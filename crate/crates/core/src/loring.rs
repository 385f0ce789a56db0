//! The Loring element of a pair of unitaries, its spectral gap at ½, the
//! spectral projection above ½ and the resulting integer index.
//!
//! For unitaries `u, v` and a symbol triple `(f, g, h)`,
//!
//! ```text
//! e(u, v) = [ f(u)             g(u) + h(u)·v ]
//!           [ v*·h(u) + g(u)   1 − f(u)      ]
//! ```
//!
//! is self-adjoint with trace `n`, and an idempotent when `u` and `v`
//! commute. When `‖[u, v]‖` is small the spectrum of `e` avoids ½ and
//! `tr χ(e) − n`, with `χ` the indicator of `[½, ∞)`, is an integer.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{eig_hermitian, eig_unitary, HermitianMatrix, SpectralDecomposition, SquareMatrix, UnitaryMatrix};
use crate::scalar::{cone, czero, Cx, Real};
use crate::symbols::SymbolTriple;

/// Smallest admissible distance from the spectrum of `e` to ½.
pub const DEFAULT_GAP_MIN: f64 = 0.05;

/// Largest admissible distance of `tr χ(e) − n` from the nearest integer.
pub const INDEX_ROUNDING_SLACK: f64 = 0.01;

/// `f(u)`, `g(u)`, `h(u)` from a single eigendecomposition of `u`.
#[derive(Clone, Debug)]
pub struct SymbolCalculus<T> {
    pub f: SquareMatrix<T>,
    pub g: SquareMatrix<T>,
    pub h: SquareMatrix<T>,
}

impl<T: Real> SymbolCalculus<T> {
    pub fn new(u: &UnitaryMatrix<T>, triple: &SymbolTriple<T>) -> Result<Self> {
        let dec = eig_unitary(u)?;
        let real = |x: T| Complex::new(x, T::zero());
        Ok(Self {
            f: dec.synthesize(|z| real(triple.eval_at(z).0)),
            g: dec.synthesize(|z| real(triple.eval_at(z).1)),
            h: dec.synthesize(|z| real(triple.eval_at(z).2)),
        })
    }
}

#[derive(Clone, Debug)]
pub struct LoringElement<T> {
    pub matrix: HermitianMatrix<T>,
    pub source_dim: usize,
    pub triple: SymbolTriple<T>,
}

impl<T: Real> LoringElement<T> {
    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn trace(&self) -> T {
        self.matrix.trace_real()
    }

    /// `e² − e`.
    pub fn square_minus_self(&self) -> Result<SquareMatrix<T>> {
        let m = self.matrix.matrix();
        m.matmul(m)?.sub_checked(m)
    }
}

/// Integer index with the data certifying it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndexResult<T> {
    pub index: i64,
    /// min over the spectrum of `|λ − ½|`
    pub gap: T,
    /// `‖e² − e‖`
    pub defect: T,
    /// `tr χ(e) − n` before rounding
    pub raw_trace: T,
}

fn check_dims<T: Real>(u: &SquareMatrix<T>, v: &SquareMatrix<T>) -> Result<()> {
    if u.dim() != v.dim() {
        return Err(Error::Dimension {
            expected: u.dim(),
            found: v.dim(),
        });
    }
    Ok(())
}

pub fn loring_element<T: Real>(
    u: &UnitaryMatrix<T>,
    v: &UnitaryMatrix<T>,
    triple: &SymbolTriple<T>,
) -> Result<LoringElement<T>> {
    check_dims(u, v)?;
    let calc = SymbolCalculus::new(u, triple)?;
    loring_element_from_calculus(&calc, v.matrix(), triple)
}

/// Builds `e` from precomputed `f(u)`, `g(u)`, `h(u)`. `v` need not be
/// unitary here, which lets truncated multiplication operators through.
pub fn loring_element_from_calculus<T: Real>(
    calc: &SymbolCalculus<T>,
    v: &SquareMatrix<T>,
    triple: &SymbolTriple<T>,
) -> Result<LoringElement<T>> {
    calc.f.check_same_dim(v)?;
    let n = v.dim();
    let hv = calc.h.matmul(v)?;
    let top_right = calc.g.add_checked(&hv)?;
    let bottom_left = v.adjoint_matmul(&calc.h)?.add_checked(&calc.g)?;
    let bottom_right = SquareMatrix::identity(n).sub_checked(&calc.f)?;
    let full = SquareMatrix::from_blocks(&calc.f, &top_right, &bottom_left, &bottom_right)?;
    let matrix = HermitianMatrix::new(full)?;
    Ok(LoringElement {
        matrix,
        source_dim: n,
        triple: triple.clone(),
    })
}

/// Right-hand side of `e² = e + R`:
///
/// ```text
/// R = [ h v g + g v* h    [f, h v]    ]
///     [ [v* h, f]         v* h² v − h² ]
/// ```
pub fn defect_identity_rhs<T: Real>(
    u: &UnitaryMatrix<T>,
    v: &UnitaryMatrix<T>,
    triple: &SymbolTriple<T>,
) -> Result<SquareMatrix<T>> {
    check_dims(u, v)?;
    let SymbolCalculus { f, g, h } = SymbolCalculus::new(u, triple)?;
    let v = v.matrix();
    let vs = v.adjoint();
    let hv = h.matmul(v)?;
    let vsh = vs.matmul(&h)?;
    let top_left = hv.matmul(&g)?.add_checked(&g.matmul(&vsh)?)?;
    let top_right = f.matmul(&hv)?.sub_checked(&hv.matmul(&f)?)?;
    let bottom_left = vsh.matmul(&f)?.sub_checked(&f.matmul(&vsh)?)?;
    let h2 = h.matmul(&h)?;
    let bottom_right = vs.matmul(&h2)?.matmul(v)?.sub_checked(&h2)?;
    SquareMatrix::from_blocks(&top_left, &top_right, &bottom_left, &bottom_right)
}

fn gap_of<T: Real>(eigenvalues: &[T]) -> T {
    let half = T::lit(0.5);
    eigenvalues
        .iter()
        .map(|&l| (l - half).abs())
        .fold(T::infinity(), T::min)
}

fn defect_of<T: Real>(eigenvalues: &[T]) -> T {
    eigenvalues
        .iter()
        .map(|&l| (l * l - l).abs())
        .fold(T::zero(), T::max)
}

#[inline]
fn chi<T: Real>(x: T) -> T {
    if x >= T::lit(0.5) {
        T::one()
    } else {
        T::zero()
    }
}

/// `min_λ |λ − ½|` over the spectrum of `e`.
pub fn spectral_gap_at_half<T: Real>(e: &LoringElement<T>) -> Result<T> {
    Ok(gap_of(&e.matrix.eigenvalues()?))
}

/// `χ(e)` for the indicator `χ` of `[½, ∞)`.
pub fn spectral_projection<T: Real>(e: &LoringElement<T>, gap_min: T) -> Result<SquareMatrix<T>> {
    projection_above_half(&e.matrix, gap_min)
}

/// `χ(H)` for any Hermitian `H` whose spectrum stays `gap_min` away from ½.
pub fn projection_above_half<T: Real>(h: &HermitianMatrix<T>, gap_min: T) -> Result<SquareMatrix<T>> {
    let dec = eig_hermitian(h)?;
    let gap = gap_of(&dec.eigenvalues);
    if !(gap > gap_min) {
        return Err(Error::GapClosed {
            gap: gap.to_f64_lossy(),
            gap_min: gap_min.to_f64_lossy(),
        });
    }
    Ok(dec.synthesize(|l| Complex::new(chi(l), T::zero())))
}

/// Certified index of a Hermitian matrix `e` of size `2n` relative to the
/// reference projection `diag(1_n, 0_n)`.
pub fn index_of_hermitian<T: Real>(e: &HermitianMatrix<T>, gap_min: T) -> Result<IndexResult<T>> {
    index_from_decomposition(&eig_hermitian(e)?, gap_min)
}

/// As [`index_of_hermitian`], from an existing eigendecomposition.
pub fn index_from_decomposition<T: Real>(dec: &SpectralDecomposition<T, T>, gap_min: T) -> Result<IndexResult<T>> {
    let n = dec.dim() / 2;
    let gap = gap_of(&dec.eigenvalues);
    if !(gap > gap_min) {
        return Err(Error::GapClosed {
            gap: gap.to_f64_lossy(),
            gap_min: gap_min.to_f64_lossy(),
        });
    }
    let trace = dec.trace_of(|l| Complex::new(chi(l), T::zero())).re;
    let raw = trace - T::from_usize_lossy(n);
    let rounded = raw.round();
    if (raw - rounded).abs() > T::lit(INDEX_ROUNDING_SLACK) {
        return Err(Error::NonIntegerIndex {
            raw: raw.to_f64_lossy(),
            slack: INDEX_ROUNDING_SLACK,
        });
    }
    Ok(IndexResult {
        index: rounded.to_i64().expect("index fits in i64"),
        gap,
        defect: defect_of(&dec.eigenvalues),
        raw_trace: raw,
    })
}

/// `tr χ(e)` from an eigendecomposition, with no gap requirement.
pub fn projection_trace<T: Real>(dec: &SpectralDecomposition<T, T>) -> T {
    dec.trace_of(|l| Complex::new(chi(l), T::zero())).re
}

/// `max_λ |χ(λ) − λ|`, which is `‖χ(e) − e‖` for Hermitian `e`.
pub fn chi_distance<T: Real>(eigenvalues: &[T]) -> T {
    eigenvalues
        .iter()
        .map(|&l| (chi(l) - l).abs())
        .fold(T::zero(), T::max)
}

/// `max_λ |λ² − λ|`, which is `‖e² − e‖` for Hermitian `e`.
pub fn idempotent_defect<T: Real>(eigenvalues: &[T]) -> T {
    defect_of(eigenvalues)
}

/// `min_λ |λ − ½|`.
pub fn gap_from_eigenvalues<T: Real>(eigenvalues: &[T]) -> T {
    gap_of(eigenvalues)
}

/// Bott index of the pair: `tr χ(e(u, v)) − n`. `u` is the clock whose
/// spectrum feeds the symbols, `v` the shift.
pub fn bott_index<T: Real>(
    u: &UnitaryMatrix<T>,
    v: &UnitaryMatrix<T>,
    triple: &SymbolTriple<T>,
    gap_min: T,
) -> Result<IndexResult<T>> {
    let e = loring_element(u, v, triple)?;
    index_of_hermitian(&e.matrix, gap_min)
}

/// Checks that `p` is a Hermitian idempotent to within the Hermitian
/// construction tolerance, returning `(‖p² − p‖, ‖p − p*‖)` in Frobenius
/// norm.
pub fn projection_defects<T: Real>(p: &SquareMatrix<T>) -> Result<(T, T)> {
    let idem = p.matmul(p)?.sub_checked(p)?.frobenius_norm();
    let sa = p.sub_checked(&p.adjoint())?.frobenius_norm();
    Ok((idem, sa))
}

/// `diag(1_n, 0_n)`.
pub fn reference_projection<T: Real>(n: usize) -> SquareMatrix<T> {
    let diag: Vec<Cx<T>> = (0..2 * n).map(|i| if i < n { cone() } else { czero() }).collect();
    SquareMatrix::from_diag(&diag)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::operator_norm;
    use crate::model::{clock, cyclic_shift, voiculescu_pair, ShiftOrientation};
    use crate::scalar::circle_point;
    use crate::symbols::default_triple;

    fn diag_unitary(xs: &[f64]) -> UnitaryMatrix<f64> {
        let phases: Vec<Cx<f64>> = xs.iter().map(|&x| circle_point(x)).collect();
        UnitaryMatrix::from_phases(&phases).unwrap()
    }

    #[test]
    fn identity_pair_gives_reference_projection() {
        let t = default_triple::<f64>();
        for n in [1, 3, 5] {
            let i = UnitaryMatrix::identity(n);
            let e = loring_element(&i, &i, &t).unwrap();
            assert!((e.matrix.matrix() - &reference_projection(n)).max_abs() < 1e-15);
            let r = bott_index(&i, &i, &t, 0.05).unwrap();
            assert_eq!(r.index, 0);
            assert!((r.gap - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn commuting_pair_is_idempotent() {
        let t = default_triple::<f64>();
        let u = diag_unitary(&[0.1, 0.37, 0.62, 0.9]);
        let v = diag_unitary(&[0.5, 0.2, 0.77, 0.05]);
        let e = loring_element(&u, &v, &t).unwrap();
        let defect = operator_norm(&e.square_minus_self().unwrap()).unwrap();
        assert!(defect <= 1e-10, "{defect}");
        assert!(spectral_gap_at_half(&e).unwrap() >= 0.5 - 1e-9);
        let rhs = defect_identity_rhs(&u, &v, &t).unwrap();
        assert!(rhs.max_abs() <= 1e-10);
        assert_eq!(bott_index(&u, &v, &t, 0.05).unwrap().index, 0);
    }

    #[test]
    fn identity_rhs_vanishes() {
        let t = default_triple::<f64>();
        let i = UnitaryMatrix::<f64>::identity(4);
        assert_eq!(defect_identity_rhs(&i, &i, &t).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn defect_identity_on_clock_and_shift() {
        let t = default_triple::<f64>();
        for n in [8usize, 16] {
            let u = clock::<f64>(n);
            let b = cyclic_shift(n, ShiftOrientation::Backward);
            let e = loring_element(&u, &b, &t).unwrap();
            let lhs = e.square_minus_self().unwrap();
            let rhs = defect_identity_rhs(&u, &b, &t).unwrap();
            assert!((&lhs - &rhs).max_abs() < 1e-10);
            let r = bott_index(&u, &b, &t, 0.05).unwrap();
            let norm_rhs = operator_norm(&rhs).unwrap();
            assert!((r.defect - norm_rhs).abs() < 1e-10);
        }
    }

    #[test]
    fn trace_is_n() {
        let t = default_triple::<f64>();
        let (u, v) = voiculescu_pair::<f64>(7).unwrap();
        let e = loring_element(&u, &v, &t).unwrap();
        assert!((e.trace() - 7.0).abs() < 1e-12);
    }

    #[test]
    fn projection_of_two_level_matrix() {
        let t = default_triple::<f64>();
        // e = R diag(0.1, 0.9) R* for a rotation R
        let (c, s) = (0.6f64, 0.8f64);
        let r = SquareMatrix::<f64>::from_real_rows(&[&[c, -s], &[s, c]]).unwrap();
        let d = SquareMatrix::from_real_diag(&[0.1, 0.9]);
        let m = &(&r * &d) * &r.adjoint();
        let e = LoringElement {
            matrix: HermitianMatrix::new(m).unwrap(),
            source_dim: 1,
            triple: t,
        };
        let p = spectral_projection(&e, 0.05).unwrap();
        // projection onto the second column of r
        let expected = SquareMatrix::<f64>::from_real_rows(&[&[s * s, -s * c], &[-s * c, c * c]]).unwrap();
        assert!((&p - &expected).max_abs() < 1e-14);
        let (idem, sa) = projection_defects(&p).unwrap();
        assert!(idem < 1e-9 && sa < 1e-9);
    }

    #[test]
    fn gap_closed_is_an_error() {
        let t = default_triple::<f64>();
        let e = LoringElement {
            matrix: HermitianMatrix::from_real_diag(&[0.49, 1.0]),
            source_dim: 1,
            triple: t,
        };
        assert!(matches!(spectral_projection(&e, 0.05), Err(Error::GapClosed { .. })));
    }

    #[test]
    fn backward_shift_has_index_one() {
        let t = default_triple::<f64>();
        for n in [16usize, 32] {
            let u = clock::<f64>(n);
            let b = cyclic_shift(n, ShiftOrientation::Backward);
            let r = bott_index(&u, &b, &t, 0.05).unwrap();
            assert_eq!(r.index, 1, "n = {n}: {r:?}");
            assert!((r.raw_trace - 1.0).abs() < 1e-6);
            let e = loring_element(&u, &b, &t).unwrap();
            let p = spectral_projection(&e, 0.05).unwrap();
            assert!((p.trace().re - (n as f64 + 1.0)).abs() < 1e-6);
        }
    }

    #[test]
    fn forward_shift_has_index_minus_one() {
        let t = default_triple::<f64>();
        let (u, v) = voiculescu_pair::<f64>(16).unwrap();
        assert_eq!(bott_index(&u, &v, &t, 0.05).unwrap().index, -1);
    }

    #[test]
    fn dimension_mismatch() {
        let t = default_triple::<f64>();
        let r = loring_element(&UnitaryMatrix::identity(2), &UnitaryMatrix::identity(3), &t);
        assert!(matches!(r, Err(Error::Dimension { .. })));
    }

    #[test]
    fn single_precision_index() {
        let t = default_triple::<f32>();
        let u = clock::<f32>(16);
        let b = cyclic_shift(16, ShiftOrientation::Backward);
        let r = bott_index(&u, &b, &t, 0.05).unwrap();
        assert_eq!(r.index, 1);
    }
}
