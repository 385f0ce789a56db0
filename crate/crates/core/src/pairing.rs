//! Pairing of the `u_t` family with matrix-valued loops, the Bott map on
//! projections, and a determinant-winding oracle.
//!
//! A loop `z ↦ Σ_m z^m a_m` acts on `ℓ²(window) ⊗ ℂ^k` by sending
//! `δ_n ⊗ ξ` to `Σ_m δ_{n+m} ⊗ a_m ξ`, truncated to the window. Basis
//! vectors are ordered mode-major: index `(n − m_min)·k + a`.

use std::collections::BTreeMap;

use num_complex::Complex;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loring::{index_of_hermitian, loring_element_from_calculus, IndexResult, SymbolCalculus, DEFAULT_GAP_MIN, INDEX_ROUNDING_SLACK};
use crate::matrix::{operator_norm, orthonormal_columns, HermitianMatrix, SquareMatrix, UnitaryMatrix};
use crate::model::{u_t_operator, TruncatedFourierSpace};
use crate::scalar::{circle_point, cone, czero, Cx, Real};
use crate::symbols::SymbolTriple;

/// Points on the circle at which loops are checked for unitarity.
pub const LOOP_CHECK_GRID: usize = 256;

/// Extra modes on each side of the automatically sized window.
pub const WINDOW_MARGIN: i64 = 4;

/// Additional margin for the stability rerun.
pub const STABILITY_MARGIN: i64 = 8;

/// Entrywise threshold below which `e` is considered equal to `diag(1, 0)`.
pub const LOCALITY_TOL: f64 = 1e-12;

pub fn loop_tolerance<T: Real>() -> T {
    T::lit(1e-8).max(T::epsilon() * T::lit(1e3))
}

pub fn projection_tolerance<T: Real>() -> T {
    T::lit(1e-10).max(T::epsilon() * T::lit(1e3))
}

/// Orthogonal projection in `M_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectionMatrix<T>(SquareMatrix<T>);

impl<T: Real> ProjectionMatrix<T> {
    pub fn new(p: SquareMatrix<T>) -> Result<Self> {
        let tol = projection_tolerance::<T>();
        let idempotent = operator_norm(&p.matmul(&p)?.sub_checked(&p)?)?;
        let selfadjoint = operator_norm(&p.sub_checked(&p.adjoint())?)?;
        if idempotent > tol || selfadjoint > tol {
            return Err(Error::NotAProjection {
                idempotent: idempotent.to_f64_lossy(),
                selfadjoint: selfadjoint.to_f64_lossy(),
            });
        }
        Ok(Self(p))
    }

    pub fn zero(k: usize) -> Self {
        Self(SquareMatrix::zeros(k))
    }

    pub fn identity(k: usize) -> Self {
        Self(SquareMatrix::identity(k))
    }

    /// `diag(1, …, 1, 0, …, 0)` with `rank` ones.
    pub fn coordinate(k: usize, rank: usize) -> Self {
        let d: Vec<T> = (0..k).map(|i| if i < rank { T::one() } else { T::zero() }).collect();
        Self(SquareMatrix::from_real_diag(&d))
    }

    /// Projection onto the span of `rank` random orthonormal vectors.
    pub fn random<R: Rng + ?Sized>(k: usize, rank: usize, rng: &mut R) -> Result<Self> {
        if rank > k {
            return Err(Error::InvalidArgument(format!("rank {rank} exceeds size {k}")));
        }
        let cols = orthonormal_columns::<T, R>(k, rank, rng);
        let p = SquareMatrix::from_fn(k, |i, j| {
            cols.iter().fold(czero(), |acc, c| acc + c[i] * c[j].conj())
        });
        Ok(Self(p.hermitian_part()))
    }

    pub fn matrix(&self) -> &SquareMatrix<T> {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    /// `round(tr p)`.
    pub fn rank(&self) -> i64 {
        self.0.trace().re.round().to_i64().expect("rank fits in i64")
    }

    pub fn complement(&self) -> SquareMatrix<T> {
        &SquareMatrix::identity(self.dim()) - &self.0
    }
}

/// Loop `z ↦ Σ_m z^m a_m` of `k × k` unitaries with value `I` at `z = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct LoopUnitary<T> {
    k: usize,
    coeffs: BTreeMap<i64, SquareMatrix<T>>,
}

impl<T: Real> LoopUnitary<T> {
    /// Validates coefficient sizes, pointwise unitarity on
    /// [`LOOP_CHECK_GRID`] points and `v(1) = I`. Zero coefficients are
    /// dropped.
    pub fn new(k: usize, coeffs: BTreeMap<i64, SquareMatrix<T>>) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidArgument("loop size must be positive".into()));
        }
        for a in coeffs.values() {
            if a.dim() != k {
                return Err(Error::Dimension {
                    expected: k,
                    found: a.dim(),
                });
            }
            a.check_finite()?;
        }
        let coeffs: BTreeMap<_, _> = coeffs.into_iter().filter(|(_, a)| a.max_abs() > T::zero()).collect();
        let v = Self { k, coeffs };
        let tol = loop_tolerance::<T>();
        let at_one = v.eval(Complex::new(T::one(), T::zero())).sub_checked(&SquareMatrix::identity(k))?;
        let based = operator_norm(&at_one)?;
        if based > tol {
            return Err(Error::LoopNotBased {
                defect: based.to_f64_lossy(),
            });
        }
        let unitary = v.unitarity_defect()?;
        if unitary > tol {
            return Err(Error::NonUnitaryLoop {
                defect: unitary.to_f64_lossy(),
            });
        }
        Ok(v)
    }

    /// `max_z ‖v(z)* v(z) − I‖` over the check grid.
    pub fn unitarity_defect(&self) -> Result<T> {
        let id = SquareMatrix::identity(self.k);
        let mut worst = T::zero();
        for j in 0..LOOP_CHECK_GRID {
            let z = circle_point(T::from_usize_lossy(j) / T::from_usize_lossy(LOOP_CHECK_GRID));
            let m = self.eval(z);
            let d = operator_norm(&m.adjoint_matmul(&m)?.sub_checked(&id)?)?;
            worst = worst.max(d);
        }
        Ok(worst)
    }

    pub fn constant_identity(k: usize) -> Self {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(0, SquareMatrix::identity(k));
        Self { k, coeffs }
    }

    /// Scalar loop `z ↦ z^m`.
    pub fn monomial(m: i64) -> Self {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(m, SquareMatrix::identity(1));
        Self { k: 1, coeffs }
    }

    /// The Bott generator `z ↦ z^{-1}`.
    pub fn bott_generator() -> Self {
        Self::monomial(-1)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn coeffs(&self) -> &BTreeMap<i64, SquareMatrix<T>> {
        &self.coeffs
    }

    /// Largest `|m|` with a nonzero coefficient.
    pub fn degree(&self) -> i64 {
        self.coeffs.keys().map(|m| m.abs()).max().unwrap_or(0)
    }

    pub fn eval(&self, z: Cx<T>) -> SquareMatrix<T> {
        let mut out = SquareMatrix::zeros(self.k);
        for (&m, a) in &self.coeffs {
            let w = z.powi(m as i32);
            out = &out + &a.scale(w);
        }
        out
    }

    /// Block-diagonal loop `v ⊕ w`.
    pub fn direct_sum(&self, other: &Self) -> Self {
        let (k1, k2) = (self.k, other.k);
        let k = k1 + k2;
        let mut coeffs = BTreeMap::new();
        for m in self.coeffs.keys().chain(other.coeffs.keys()) {
            coeffs.entry(*m).or_insert_with(|| {
                let a = self.coeffs.get(m);
                let b = other.coeffs.get(m);
                SquareMatrix::from_fn(k, |i, j| match (i < k1, j < k1) {
                    (true, true) => a.map_or(czero(), |a| a[(i, j)]),
                    (false, false) => b.map_or(czero(), |b| b[(i - k1, j - k1)]),
                    _ => czero(),
                })
            });
        }
        Self { k, coeffs }
    }

    /// `v ⊗ p + 1 ⊗ (1 − p)`, with the loop factor as the outer index.
    pub fn tensor_projection(&self, p: &ProjectionMatrix<T>) -> Self {
        let k = self.k * p.dim();
        let mut coeffs: BTreeMap<i64, SquareMatrix<T>> =
            self.coeffs.iter().map(|(&m, a)| (m, a.kron(p.matrix()))).collect();
        let rest = SquareMatrix::identity(self.k).kron(&p.complement());
        let zero = SquareMatrix::zeros(k);
        let slot = coeffs.entry(0).or_insert(zero);
        *slot = &*slot + &rest;
        let coeffs = coeffs.into_iter().filter(|(_, a)| a.max_abs() > T::zero()).collect();
        Self { k, coeffs }
    }

    pub fn to_spec(&self) -> LoopSpec {
        LoopSpec {
            k: self.k,
            coeffs: self
                .coeffs
                .iter()
                .map(|(&mode, a)| ModeSpec {
                    mode,
                    matrix: (0..self.k)
                        .map(|i| a.row(i).iter().map(|z| [z.re.to_f64_lossy(), z.im.to_f64_lossy()]).collect())
                        .collect(),
                })
                .collect(),
        }
    }

    pub fn from_spec(spec: &LoopSpec) -> Result<Self> {
        let k = spec.k;
        let mut coeffs = BTreeMap::new();
        for entry in &spec.coeffs {
            if entry.matrix.len() != k || entry.matrix.iter().any(|r| r.len() != k) {
                return Err(Error::InvalidArgument(format!("coefficient of mode {} is not {k}×{k}", entry.mode)));
            }
            let rows: Vec<Vec<Cx<T>>> = entry
                .matrix
                .iter()
                .map(|r| r.iter().map(|&[re, im]| Complex::new(T::lit(re), T::lit(im))).collect())
                .collect();
            let a = SquareMatrix::from_rows(&rows)?;
            if coeffs.insert(entry.mode, a).is_some() {
                return Err(Error::InvalidArgument(format!("mode {} listed twice", entry.mode)));
            }
        }
        Self::new(k, coeffs)
    }
}

/// Serialized loop: `{"k": 1, "coeffs": [{"mode": -1, "matrix": [[[1, 0]]]}]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoopSpec {
    pub k: usize,
    pub coeffs: Vec<ModeSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSpec {
    pub mode: i64,
    /// rows of `[re, im]` pairs
    pub matrix: Vec<Vec<[f64; 2]>>,
}

/// `z ↦ z^{-1}p + (1 − p)`.
pub fn bott_loop<T: Real>(p: &ProjectionMatrix<T>) -> LoopUnitary<T> {
    let mut coeffs = BTreeMap::new();
    coeffs.insert(-1, p.matrix().clone());
    coeffs.insert(0, p.complement());
    let coeffs = coeffs.into_iter().filter(|(_, a)| a.max_abs() > T::zero()).collect();
    LoopUnitary { k: p.dim(), coeffs }
}

/// Block matrix of the loop acting on `window ⊗ ℂ^k`, coefficient `a_m`
/// on the `m`-th block diagonal, truncated at the window edges.
pub fn multiplication_operator<T: Real>(v: &LoopUnitary<T>, space: TruncatedFourierSpace) -> Result<SquareMatrix<T>> {
    let deg = v.degree();
    if space.m_min() > -deg || space.m_max() < deg {
        return Err(Error::Window(format!("window {space} does not contain modes ±{deg}")));
    }
    let k = v.k;
    let dim = space.dim() * k;
    let mut out = SquareMatrix::zeros(dim);
    for (col_idx, n) in space.modes().enumerate() {
        for (&m, a) in &v.coeffs {
            let Some(row_idx) = space.index_of(n + m) else {
                continue;
            };
            for i in 0..k {
                for j in 0..k {
                    out[(row_idx * k + i, col_idx * k + j)] = a[(i, j)];
                }
            }
        }
    }
    Ok(out)
}

/// Window `[−deg − margin, ceil(t) + deg + margin]`.
pub fn auto_window<T: Real>(v: &LoopUnitary<T>, t: T, margin: i64) -> Result<TruncatedFourierSpace> {
    let deg = v.degree();
    let top = t.ceil().to_i64().ok_or_else(|| Error::InvalidArgument(format!("t = {t} out of range")))?;
    TruncatedFourierSpace::new(-deg - margin, top + deg + margin)
}

/// Certified pairing with the window it was computed on.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PairingResult<T> {
    pub result: IndexResult<T>,
    pub window: TruncatedFourierSpace,
    /// Window of the confirming rerun.
    pub stability_window: TruncatedFourierSpace,
    /// Smallest half-width outside which `e = diag(1, 0)`.
    pub locality: i64,
}

/// `e(u_t ⊗ 1_k, V)` on a given window.
pub fn pairing_element<T: Real>(
    v: &LoopUnitary<T>,
    t: T,
    space: TruncatedFourierSpace,
    triple: &SymbolTriple<T>,
) -> Result<HermitianMatrix<T>> {
    let ut = u_t_operator(t, space)?;
    let u = ut.kron(&UnitaryMatrix::identity(v.k));
    let calc = SymbolCalculus::new(&u, triple)?;
    let big_v = multiplication_operator(v, space)?;
    Ok(loring_element_from_calculus(&calc, &big_v, triple)?.matrix)
}

/// Range `[lo, hi]` of modes touched by entries of `e − diag(1, 0)` above
/// [`LOCALITY_TOL`], or `None` if there are none.
pub fn nontrivial_mode_range<T: Real>(e: &SquareMatrix<T>, space: TruncatedFourierSpace, k: usize) -> Option<(i64, i64)> {
    let half = e.dim() / 2;
    let tol = T::lit(LOCALITY_TOL);
    let mode_of = |idx: usize| space.mode_at((idx % half) / k);
    let mut range: Option<(i64, i64)> = None;
    for i in 0..e.dim() {
        for j in 0..e.dim() {
            let reference = if i == j && i < half { cone() } else { czero() };
            if (e[(i, j)] - reference).norm() > tol {
                for m in [mode_of(i), mode_of(j)] {
                    range = Some(match range {
                        None => (m, m),
                        Some((lo, hi)) => (lo.min(m), hi.max(m)),
                    });
                }
            }
        }
    }
    range
}

/// Smallest `N` such that `e(u_t ⊗ 1, V)` agrees entrywise with
/// `diag(1, 0)` outside `span{δ_{−N}, …, δ_N} ⊗ ℂ^k`, on the automatic
/// window.
pub fn locality_window<T: Real>(v: &LoopUnitary<T>, t: T, triple: &SymbolTriple<T>) -> Result<i64> {
    let space = auto_window(v, t, WINDOW_MARGIN)?;
    let e = pairing_element(v, t, space, triple)?;
    Ok(nontrivial_mode_range(e.matrix(), space, v.k).map_or(0, |(lo, hi)| lo.abs().max(hi.abs())))
}

fn index_on_window<T: Real>(
    v: &LoopUnitary<T>,
    t: T,
    space: TruncatedFourierSpace,
    triple: &SymbolTriple<T>,
    gap_min: T,
) -> Result<(IndexResult<T>, Option<(i64, i64)>)> {
    let e = pairing_element(v, t, space, triple)?;
    let range = nontrivial_mode_range(e.matrix(), space, v.k);
    let result = index_of_hermitian(&e, gap_min)?;
    Ok((result, range))
}

/// `⟨[u_t], [v]⟩ = tr χ(e(u_t ⊗ 1_k, V)) − tr diag(1, 0)`, on the automatic
/// window and confirmed on a window widened by [`STABILITY_MARGIN`].
pub fn pairing_index<T: Real>(v: &LoopUnitary<T>, t: T, triple: &SymbolTriple<T>) -> Result<PairingResult<T>> {
    pairing_index_with_gap(v, t, triple, T::lit(DEFAULT_GAP_MIN))
}

pub fn pairing_index_with_gap<T: Real>(
    v: &LoopUnitary<T>,
    t: T,
    triple: &SymbolTriple<T>,
    gap_min: T,
) -> Result<PairingResult<T>> {
    let window = auto_window(v, t, WINDOW_MARGIN)?;
    let (result, range) = index_on_window(v, t, window, triple, gap_min)?;
    if let Some((lo, hi)) = range {
        if lo <= window.m_min() || hi >= window.m_max() {
            return Err(Error::Window(format!(
                "e differs from diag(1, 0) at the edge of window {window} (modes {lo}..={hi})"
            )));
        }
    }
    let stability_window = window.widened(STABILITY_MARGIN);
    let (second, _) = index_on_window(v, t, stability_window, triple, gap_min)?;
    if second.index != result.index {
        return Err(Error::Stability {
            first: result.index,
            second: second.index,
        });
    }
    Ok(PairingResult {
        result,
        window,
        stability_window,
        locality: range.map_or(0, |(lo, hi)| lo.abs().max(hi.abs())),
    })
}

/// Pairing on an explicit window, without the stability rerun.
pub fn pairing_index_on_window<T: Real>(
    v: &LoopUnitary<T>,
    t: T,
    space: TruncatedFourierSpace,
    triple: &SymbolTriple<T>,
    gap_min: T,
) -> Result<IndexResult<T>> {
    let top = t.ceil().to_i64().unwrap_or(i64::MAX);
    let deg = v.degree();
    if space.m_min() > -deg - 1 || space.m_max() < top.saturating_add(deg + 1) {
        return Err(Error::Window(format!(
            "window {space} too small for degree {deg} at t = {t}"
        )));
    }
    Ok(index_on_window(v, t, space, triple, gap_min)?.0)
}

/// Winding number of `det v(z)` around the circle.
pub fn winding_number<T: Real>(v: &LoopUnitary<T>, samples: usize) -> Result<i64> {
    let needed = 8 * (v.degree() as usize + 1);
    if samples < needed {
        return Err(Error::Sample(format!("{samples} samples; need at least {needed}")));
    }
    let floor = T::lit(1e-6);
    let det_at = |j: usize| -> Result<Cx<T>> {
        let z = circle_point(T::from_usize_lossy(j) / T::from_usize_lossy(samples));
        let d = v.eval(z).determinant();
        if d.norm() < floor {
            return Err(Error::Sample(format!("det v(z) = {d} nearly vanishes at sample {j}")));
        }
        Ok(d)
    };
    let first = det_at(0)?;
    let mut prev = first;
    let mut total = T::zero();
    for j in 1..=samples {
        let cur = if j == samples { first } else { det_at(j)? };
        total = total + (cur / prev).arg();
        prev = cur;
    }
    let turns = total / T::TAU();
    let rounded = turns.round();
    if (turns - rounded).abs() > T::lit(INDEX_ROUNDING_SLACK) {
        return Err(Error::Sample(format!("phase change {turns} turns is not an integer")));
    }
    Ok(rounded.to_i64().expect("winding fits in i64"))
}

/// `α∘β = id`: the pairing of the Bott loop of `p` equals `rank p`.
pub fn roundtrip_check<T: Real>(p: &ProjectionMatrix<T>, t: T, triple: &SymbolTriple<T>) -> Result<bool> {
    let r = pairing_index(&bott_loop(p), t, triple)?;
    Ok(r.result.index == p.rank())
}

/// `⟨u_t, v ⊗ p + 1 ⊗ (1 − p)⟩ = ⟨u_t, v⟩ · rank p`.
pub fn product_compatibility_check<T: Real>(
    v: &LoopUnitary<T>,
    p: &ProjectionMatrix<T>,
    t: T,
    triple: &SymbolTriple<T>,
) -> Result<bool> {
    let lhs = pairing_index(&v.tensor_projection(p), t, triple)?.result.index;
    let rhs = pairing_index(v, t, triple)?.result.index;
    Ok(lhs == rhs * p.rank())
}
