//! Concrete operator families: Voiculescu's clock and shift, the `u_t`
//! rotations on a truncated Fourier basis, bilateral shifts and the Dirac
//! operator model.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{
    apply_complex_function_hermitian, commutator, operator_norm, HermitianMatrix, SquareMatrix, UnitaryMatrix,
};
use crate::scalar::{circle_point, cone, Cx, Real};

/// Finite window `{m_min, …, m_max}` of Fourier modes `δ_m` of `L²(S¹)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TruncatedFourierSpace {
    m_min: i64,
    m_max: i64,
}

impl TruncatedFourierSpace {
    /// The window must contain mode 0.
    pub fn new(m_min: i64, m_max: i64) -> Result<Self> {
        if !(m_min <= 0 && 0 <= m_max) {
            return Err(Error::Window(format!(
                "window [{m_min}, {m_max}] does not contain mode 0"
            )));
        }
        Ok(Self { m_min, m_max })
    }

    /// Modes `0..n`, the index set of Voiculescu's `n × n` matrices.
    pub fn cyclic(n: usize) -> Self {
        assert!(n >= 1, "window needs at least one mode");
        Self { m_min: 0, m_max: n as i64 - 1 }
    }

    pub fn m_min(&self) -> i64 {
        self.m_min
    }

    pub fn m_max(&self) -> i64 {
        self.m_max
    }

    pub fn dim(&self) -> usize {
        (self.m_max - self.m_min + 1) as usize
    }

    pub fn modes(&self) -> impl Iterator<Item = i64> {
        self.m_min..=self.m_max
    }

    pub fn contains(&self, mode: i64) -> bool {
        (self.m_min..=self.m_max).contains(&mode)
    }

    /// Row/column index of a mode.
    pub fn index_of(&self, mode: i64) -> Option<usize> {
        self.contains(mode).then(|| (mode - self.m_min) as usize)
    }

    pub fn mode_at(&self, index: usize) -> i64 {
        self.m_min + index as i64
    }

    /// Same window widened by `margin` modes on both sides.
    pub fn widened(&self, margin: i64) -> Self {
        Self {
            m_min: self.m_min - margin,
            m_max: self.m_max + margin,
        }
    }
}

impl fmt::Display for TruncatedFourierSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.m_min, self.m_max)
    }
}

/// Direction a shift moves basis vectors.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ShiftOrientation {
    /// `δ_n ↦ δ_{n−1}`: multiplication by `z⁻¹`, the Bott generator.
    Backward,
    /// `δ_n ↦ δ_{n+1}`: Voiculescu's `v_n`.
    Forward,
}

impl ShiftOrientation {
    pub fn step(self) -> i64 {
        match self {
            ShiftOrientation::Backward => -1,
            ShiftOrientation::Forward => 1,
        }
    }
}

/// How a shift treats the window edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Boundary {
    /// Wrap around: a unitary permutation.
    Cyclic,
    /// Drop vectors shifted out of the window: a partial isometry.
    Truncated,
}

/// A shift matrix tagged with the conventions it was built with.
#[derive(Clone, Debug, PartialEq)]
pub struct ShiftOperator<T> {
    pub matrix: SquareMatrix<T>,
    pub orientation: ShiftOrientation,
    pub boundary: Boundary,
}

impl<T: Real> ShiftOperator<T> {
    /// The underlying unitary; fails for truncated shifts.
    pub fn unitary(&self) -> Result<UnitaryMatrix<T>> {
        UnitaryMatrix::new(self.matrix.clone())
    }
}

/// Voiculescu's pair: `u_n = diag(e^{2πik/n})` and the forward cyclic shift
/// `v_n: δ_k ↦ δ_{k+1 mod n}`.
pub fn voiculescu_pair<T: Real>(n: usize) -> Result<(UnitaryMatrix<T>, UnitaryMatrix<T>)> {
    if n == 0 {
        return Err(Error::InvalidArgument("Voiculescu pair needs n ≥ 1".into()));
    }
    let u = clock(n);
    let v = cyclic_shift(n, ShiftOrientation::Forward);
    Ok((u, v))
}

/// `diag(e^{2πik/n})`, `k = 0..n`.
pub fn clock<T: Real>(n: usize) -> UnitaryMatrix<T> {
    let nn = T::from_usize_lossy(n);
    let phases: Vec<Cx<T>> = (0..n).map(|k| circle_point(T::from_usize_lossy(k) / nn)).collect();
    UnitaryMatrix::new_unchecked(SquareMatrix::from_diag(&phases))
}

/// Cyclic shift on `n` modes. The backward one is the `b_N` whose pairing
/// with the clock has Bott index `+1`.
pub fn cyclic_shift<T: Real>(n: usize, orientation: ShiftOrientation) -> UnitaryMatrix<T> {
    let op = bilateral_shift::<T>(TruncatedFourierSpace::cyclic(n), Boundary::Cyclic, orientation);
    UnitaryMatrix::new_unchecked(op.matrix)
}

pub fn commutator_norm_voiculescu<T: Real>(n: usize) -> Result<T> {
    let (u, v) = voiculescu_pair::<T>(n)?;
    operator_norm(&commutator(&u, &v)?)
}

/// The diagonal unitary `u_t` on a window: `e^{2πin/t}` for `0 ≤ n ≤ t`,
/// `1` on every other mode.
pub fn u_t_operator<T: Real>(t: T, space: TruncatedFourierSpace) -> Result<UnitaryMatrix<T>> {
    if !(t >= T::one()) {
        return Err(Error::InvalidArgument(format!("u_t needs t ≥ 1, got {t}")));
    }
    let phases: Vec<Cx<T>> = space
        .modes()
        .map(|n| {
            let nf = T::from_i64(n).expect("mode representable");
            if n >= 0 && nf <= t {
                circle_point(nf / t)
            } else {
                cone()
            }
        })
        .collect();
    Ok(UnitaryMatrix::new_unchecked(SquareMatrix::from_diag(&phases)))
}

/// Shift on a window. Entry `(i, j)` is the coefficient of `δ_i` in the
/// image of `δ_j`.
pub fn bilateral_shift<T: Real>(
    space: TruncatedFourierSpace,
    boundary: Boundary,
    orientation: ShiftOrientation,
) -> ShiftOperator<T> {
    let n = space.dim();
    let step = orientation.step();
    let mut m = SquareMatrix::zeros(n);
    for j in 0..n {
        let target = j as i64 + step;
        let row = match boundary {
            Boundary::Cyclic => Some(target.rem_euclid(n as i64) as usize),
            Boundary::Truncated => (0..n as i64).contains(&target).then_some(target as usize),
        };
        if let Some(i) = row {
            m[(i, j)] = m[(i, j)] + cone();
        }
    }
    ShiftOperator {
        matrix: m,
        orientation,
        boundary,
    }
}

/// Ramp profile `χ` with `χ = −1` on `(−∞, 0]`, `χ = 1` on `[1, ∞)` and
/// `χ(x) = 2x − 1` in between.
#[derive(Clone)]
pub struct DiracRamp<T> {
    chi: Arc<dyn Fn(T) -> T + Send + Sync>,
}

impl<T: Real> DiracRamp<T> {
    pub fn linear() -> Self {
        Self {
            chi: Arc::new(|x: T| {
                if x <= T::zero() {
                    -T::one()
                } else if x >= T::one() {
                    T::one()
                } else {
                    T::lit(2.0) * x - T::one()
                }
            }),
        }
    }

    /// Any profile; `ut_from_dirac` only agrees with `u_t` for the linear one.
    pub fn custom(chi: impl Fn(T) -> T + Send + Sync + 'static) -> Self {
        Self { chi: Arc::new(chi) }
    }

    pub fn eval(&self, x: T) -> T {
        (self.chi)(x)
    }
}

impl<T: Real> Default for DiracRamp<T> {
    fn default() -> Self {
        Self::linear()
    }
}

impl<T> fmt::Debug for DiracRamp<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("DiracRamp")
    }
}

/// `F_t = χ(t⁻¹D)`, diagonal with entries `χ(n/t)` since `Dδ_n = nδ_n`.
pub fn dirac_f_t<T: Real>(t: T, space: TruncatedFourierSpace, ramp: &DiracRamp<T>) -> Result<HermitianMatrix<T>> {
    if !(t >= T::one()) {
        return Err(Error::InvalidArgument(format!("F_t needs t ≥ 1, got {t}")));
    }
    let diag: Vec<T> = space
        .modes()
        .map(|n| ramp.eval(T::from_i64(n).expect("mode representable") / t))
        .collect();
    Ok(HermitianMatrix::from_real_diag(&diag))
}

/// Entrywise tolerance for the `−e^{πiF_t} = u_t` identity.
pub const DIRAC_IDENTITY_TOL: f64 = 1e-12;

/// `−e^{πiF_t}` through the functional calculus, checked entrywise
/// against [`u_t_operator`].
pub fn ut_from_dirac<T: Real>(t: T, space: TruncatedFourierSpace, ramp: &DiracRamp<T>) -> Result<UnitaryMatrix<T>> {
    let f_t = dirac_f_t(t, space, ramp)?;
    let exp = apply_complex_function_hermitian(&f_t, |x| -Complex::from_polar(T::one(), T::PI() * x))?;
    let reference = u_t_operator(t, space)?;
    let max_err = exp.sub_checked(reference.matrix())?.max_abs();
    let tol = T::lit(DIRAC_IDENTITY_TOL).max(T::epsilon() * T::lit(64.0));
    if max_err > tol {
        return Err(Error::ModelInconsistency {
            max_err: max_err.to_f64_lossy(),
            tol: tol.to_f64_lossy(),
        });
    }
    UnitaryMatrix::new(exp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::apply_function_unitary;
    use crate::symbols::default_triple;

    fn c(re: f64, im: f64) -> Cx<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn window_must_contain_zero() {
        assert!(TruncatedFourierSpace::new(1, 4).is_err());
        assert!(TruncatedFourierSpace::new(-3, -1).is_err());
        let s = TruncatedFourierSpace::new(-2, 6).unwrap();
        assert_eq!(s.dim(), 9);
        assert_eq!(s.index_of(0), Some(2));
        assert_eq!(s.index_of(7), None);
        assert_eq!(s.mode_at(8), 6);
    }

    #[test]
    fn voiculescu_small_cases() {
        let (u, v) = voiculescu_pair::<f64>(1).unwrap();
        assert_eq!(*u.matrix(), SquareMatrix::identity(1));
        assert_eq!(*v.matrix(), SquareMatrix::identity(1));

        let (u, v) = voiculescu_pair::<f64>(2).unwrap();
        assert!((u[(1, 1)] - c(-1.0, 0.0)).norm() < 1e-15);
        assert_eq!(u[(0, 0)], c(1.0, 0.0));
        // v δ_0 = δ_1
        assert_eq!(v[(1, 0)], c(1.0, 0.0));
        assert_eq!(v[(0, 1)], c(1.0, 0.0));
        assert_eq!(v[(0, 0)], c(0.0, 0.0));
        assert!(voiculescu_pair::<f64>(0).is_err());
    }

    /// Brute force: ‖[u,v]‖ is attained on a basis vector because [u,v] is
    /// a weighted permutation.
    fn commutator_norm_on_basis(n: usize) -> f64 {
        let (u, v) = voiculescu_pair::<f64>(n).unwrap();
        let k = commutator(&u, &v).unwrap();
        (0..n)
            .map(|j| (0..n).map(|i| k[(i, j)].norm_sqr()).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }

    #[test]
    fn commutator_norm_closed_form() {
        assert_eq!(commutator_norm_voiculescu::<f64>(1).unwrap(), 0.0);
        assert!((commutator_norm_voiculescu::<f64>(2).unwrap() - 2.0).abs() < 1e-12);
        for n in [8usize, 64] {
            let closed = 2.0 * (std::f64::consts::PI / n as f64).sin();
            let brute = commutator_norm_on_basis(n);
            let got = commutator_norm_voiculescu::<f64>(n).unwrap();
            assert!((brute - closed).abs() < 1e-12);
            assert!((got - closed).abs() < 1e-12, "n = {n}: {got} vs {closed}");
        }
        assert!((commutator_norm_voiculescu::<f64>(64).unwrap() - 0.0981353).abs() < 1e-6);
    }

    #[test]
    fn u_t_examples() {
        let s = TruncatedFourierSpace::new(-3, 5).unwrap();
        let u = u_t_operator(1.0f64, s).unwrap();
        assert!((u.matrix() - &SquareMatrix::identity(9)).max_abs() < 1e-15);

        let s = TruncatedFourierSpace::new(-2, 6).unwrap();
        let u = u_t_operator(4.0f64, s).unwrap();
        let expected = [
            c(1.0, 0.0),
            c(1.0, 0.0),
            c(1.0, 0.0),
            c(0.0, 1.0),
            c(-1.0, 0.0),
            c(0.0, -1.0),
            c(1.0, 0.0),
            c(1.0, 0.0),
            c(1.0, 0.0),
        ];
        for (i, e) in expected.iter().enumerate() {
            assert!((u[(i, i)] - e).norm() < 1e-15, "mode {}", s.mode_at(i));
        }
        assert!(u_t_operator(0.5f64, s).is_err());
    }

    #[test]
    fn u_t_at_integer_matches_clock() {
        for n in [3usize, 8, 13] {
            let u = u_t_operator(n as f64, TruncatedFourierSpace::cyclic(n)).unwrap();
            let (clock, _) = voiculescu_pair::<f64>(n).unwrap();
            assert!((u.matrix() - clock.matrix()).max_abs() < 1e-15);
        }
    }

    #[test]
    fn shifts() {
        let cyc = bilateral_shift::<f64>(TruncatedFourierSpace::cyclic(2), Boundary::Cyclic, ShiftOrientation::Backward);
        let x = SquareMatrix::<f64>::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap();
        assert_eq!(cyc.matrix, x);
        assert!(cyc.unitary().is_ok());

        let tr = bilateral_shift::<f64>(
            TruncatedFourierSpace::new(0, 2).unwrap(),
            Boundary::Truncated,
            ShiftOrientation::Backward,
        );
        assert!(tr.unitary().is_err());
        let defect = &tr.matrix.adjoint_matmul(&tr.matrix).unwrap() - &SquareMatrix::identity(3);
        assert!((operator_norm(&defect).unwrap() - 1.0).abs() < 1e-14);
        // backward: δ_n ↦ δ_{n−1} puts ones on the superdiagonal
        assert_eq!(tr.matrix[(0, 1)], c(1.0, 0.0));
        assert_eq!(tr.matrix[(1, 2)], c(1.0, 0.0));
    }

    #[test]
    fn dirac_entries() {
        let ramp = DiracRamp::<f64>::linear();
        let s = TruncatedFourierSpace::new(-4, 8).unwrap();
        let f = dirac_f_t(4.0, s, &ramp).unwrap();
        let expected = [-1.0, -1.0, -1.0, -1.0, -1.0, -0.5, 0.0, 0.5, 1.0, 1.0, 1.0, 1.0, 1.0];
        for (i, e) in expected.iter().enumerate() {
            assert!((f[(i, i)].re - e).abs() < 1e-15);
        }
        let s = TruncatedFourierSpace::new(-3, 3).unwrap();
        let f = dirac_f_t(2.0, s, &ramp).unwrap();
        assert_eq!(f[(0, 0)].re, -1.0);
        assert_eq!(f[(4, 4)].re, 0.0);
    }

    #[test]
    fn dirac_identity_window() {
        let s = TruncatedFourierSpace::new(-8, 32).unwrap();
        for t in [1.0, 2.0, 7.5, 16.0, 31.0] {
            let via_dirac = ut_from_dirac(t, s, &DiracRamp::linear()).unwrap();
            let direct = u_t_operator(t, s).unwrap();
            assert!((via_dirac.matrix() - direct.matrix()).max_abs() <= 1e-12);
        }
    }

    #[test]
    fn dirac_identity_detects_wrong_ramp() {
        let s = TruncatedFourierSpace::new(-2, 8).unwrap();
        let ramp = DiracRamp::custom(|x: f64| x.clamp(-1.0, 1.0));
        assert!(matches!(ut_from_dirac(4.0, s, &ramp), Err(Error::ModelInconsistency { .. })));
    }

    #[test]
    fn f_of_clock_is_diagonal_evaluation() {
        let t = default_triple::<f64>();
        let (u, _) = voiculescu_pair::<f64>(8).unwrap();
        let fu = apply_function_unitary(&u, |z| Complex::new(t.eval_at(z).0, 0.0)).unwrap();
        for i in 0..8 {
            for j in 0..8 {
                let expected = if i == j { t.f(i as f64 / 8.0) } else { 0.0 };
                assert!((fu[(i, j)] - c(expected, 0.0)).norm() < 1e-12);
            }
        }
    }
}
