//! Distance from an almost-commuting pair to exactly commuting pairs.
//!
//! Upper bounds come from a heuristic: simultaneously diagonalise `u` and
//! `v` as well as possible by Jacobi rotations, then replace them by the
//! diagonal parts in that basis. Lower bounds come from the index: a
//! commuting pair closer than `gap / L` would have the same nonzero index,
//! where `L` bounds how fast `e(u, v)` moves with `(u, v)`.

use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::loring::{bott_index, DEFAULT_GAP_MIN};
use crate::matrix::{eig_hermitian, operator_norm, random_unitary, HermitianMatrix, SquareMatrix, UnitaryMatrix};
use crate::model::{clock, cyclic_shift, ShiftOrientation};
use crate::scalar::{czero, Cx, Real};
use crate::symbols::SymbolTriple;

/// Quadrature points for the symbol Fourier coefficients.
pub const FOURIER_POINTS: usize = 1 << 14;

/// Modes summed explicitly; the rest is covered by the tail bound.
pub const FOURIER_MODES: usize = 512;

/// Safety factor on the fitted tail.
pub const TAIL_SAFETY: f64 = 2.0;

/// Fitted decay exponents at or below this are treated as non-summable
/// against the weight `|m|`.
pub const MIN_DECAY_EXPONENT: f64 = 2.2;

/// Coefficients below this fraction of the largest one are quadrature
/// noise; a symbol whose tail is all noise has no tail term.
pub const NOISE_FLOOR: f64 = 1e-13;

/// Exactly commuting pair `u' = w·diag(phases_u)·w*`, `v' = w·diag(phases_v)·w*`.
#[derive(Clone, Debug)]
pub struct CommutingPair<T> {
    pub w: UnitaryMatrix<T>,
    pub phases_u: Vec<Cx<T>>,
    pub phases_v: Vec<Cx<T>>,
}

impl<T: Real> CommutingPair<T> {
    pub fn u(&self) -> SquareMatrix<T> {
        self.reconstruct(&self.phases_u)
    }

    pub fn v(&self) -> SquareMatrix<T> {
        self.reconstruct(&self.phases_v)
    }

    fn reconstruct(&self, phases: &[Cx<T>]) -> SquareMatrix<T> {
        let w = self.w.matrix();
        let n = w.dim();
        SquareMatrix::from_fn(n, |i, j| {
            (0..n).fold(czero(), |acc, k| acc + w[(i, k)] * phases[k] * w[(j, k)].conj())
        })
    }

    /// `‖[u', v']‖`.
    pub fn commutator_norm(&self) -> Result<T> {
        let (u, v) = (self.u(), self.v());
        operator_norm(&u.matmul(&v)?.sub_checked(&v.matmul(&u)?)?)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct NearestOptions {
    /// Jacobi sweeps per restart.
    pub max_iters: usize,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for NearestOptions {
    fn default() -> Self {
        Self {
            max_iters: 200,
            restarts: 8,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct NearestResult<T> {
    pub pair: CommutingPair<T>,
    /// `max(‖u − u'‖, ‖v − v'‖)`
    pub distance: T,
    /// Whether the winning restart stopped before `max_iters` sweeps.
    pub converged: bool,
    pub restart: usize,
}

/// Hermitian parts `Re u, Im u, Re v, Im v`; the off-diagonal Frobenius mass
/// of `w*uw` is that of the two real parts combined.
fn hermitian_parts<T: Real>(u: &SquareMatrix<T>, v: &SquareMatrix<T>) -> [SquareMatrix<T>; 4] {
    [u.hermitian_part(), u.skew_part(), v.hermitian_part(), v.skew_part()]
}

fn conjugate_by<T: Real>(w: &SquareMatrix<T>, m: &SquareMatrix<T>) -> Result<SquareMatrix<T>> {
    w.adjoint_matmul(&m.matmul(w)?)
}

/// Jacobi joint diagonalisation of Hermitian matrices, starting from the
/// basis `w`. Returns the final basis and whether it converged.
fn joint_diagonalize<T: Real>(
    mats: &mut [SquareMatrix<T>],
    w: &mut SquareMatrix<T>,
    max_sweeps: usize,
) -> bool {
    let n = w.dim();
    let threshold = T::epsilon().sqrt() * T::lit(1e-2);
    let mut off = off_diagonal_mass(mats);
    for _ in 0..max_sweeps {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                // G = Σ h hᵀ with h = (a_pp − a_qq, 2 Re a_pq, 2 Im a_pq)
                let mut g = [[T::zero(); 3]; 3];
                for a in mats.iter() {
                    let apq = a[(p, q)];
                    let h = [a[(p, p)].re - a[(q, q)].re, T::lit(2.0) * apq.re, T::lit(2.0) * apq.im];
                    for i in 0..3 {
                        for j in 0..3 {
                            g[i][j] = g[i][j] + h[i] * h[j];
                        }
                    }
                }
                let [x, y, z] = top_eigenvector3(&g);
                let (x, y, z) = if x < T::zero() { (-x, -y, -z) } else { (x, y, z) };
                let c = ((x + T::one()) * T::lit(0.5)).sqrt();
                let s = Complex::new(y, -z) * (T::lit(0.5) / c);
                if s.norm() <= threshold {
                    continue;
                }
                rotated = true;
                for a in mats.iter_mut() {
                    rotate_pair(a, p, q, c, s);
                }
                rotate_columns(w, p, q, c, s);
            }
        }
        let next = off_diagonal_mass(mats);
        if !rotated || off - next <= T::lit(SWEEP_GAIN_TOL) * off {
            return true;
        }
        off = next;
    }
    false
}

fn off_diagonal_mass<T: Real>(mats: &[SquareMatrix<T>]) -> T {
    let mut total = T::zero();
    for a in mats {
        let n = a.dim();
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    total = total + a[(i, j)].norm_sqr();
                }
            }
        }
    }
    total
}

/// `A ← G* A G` with `G` the identity except `[[c, −s̄], [s, c]]` on `(p, q)`.
fn rotate_pair<T: Real>(a: &mut SquareMatrix<T>, p: usize, q: usize, c: T, s: Cx<T>) {
    let n = a.dim();
    for j in 0..n {
        let (ap, aq) = (a[(p, j)], a[(q, j)]);
        a[(p, j)] = ap * c + aq * s.conj();
        a[(q, j)] = -ap * s + aq * c;
    }
    rotate_columns(a, p, q, c, s);
}

fn rotate_columns<T: Real>(a: &mut SquareMatrix<T>, p: usize, q: usize, c: T, s: Cx<T>) {
    let n = a.dim();
    for i in 0..n {
        let (ap, aq) = (a[(i, p)], a[(i, q)]);
        a[(i, p)] = ap * c + aq * s;
        a[(i, q)] = -ap * s.conj() + aq * c;
    }
}

/// Unit vector of the top eigenspace of a symmetric 3×3 matrix closest to
/// `(1, 0, 0)`, the identity rotation. Choosing the closest one keeps the
/// sweep still along directions where the objective is flat.
fn top_eigenvector3<T: Real>(g: &[[T; 3]; 3]) -> [T; 3] {
    let m = SquareMatrix::from_fn(3, |i, j| Complex::new(g[i][j], T::zero()));
    let h = HermitianMatrix::with_tolerance(m, T::infinity()).expect("symmetric by construction");
    let dec = eig_hermitian(&h).expect("3×3 eigensolver");
    let vecs = dec.eigenvectors.matrix();
    let top = dec.eigenvalues[2];
    let tol = top.abs() * T::lit(1e-10).max(T::epsilon() * T::lit(1e3));
    let space: Vec<usize> = (0..3).filter(|&k| dec.eigenvalues[k] >= top - tol).collect();
    // P e₁ with P the (real) projector onto the top eigenspace
    let mut r = [T::zero(); 3];
    for &k in &space {
        let c = vecs[(0, k)].conj();
        for (i, ri) in r.iter_mut().enumerate() {
            *ri = *ri + (vecs[(i, k)] * c).re;
        }
    }
    let norm = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
    if norm > T::lit(1e-6) {
        return [r[0] / norm, r[1] / norm, r[2] / norm];
    }
    // e₁ is orthogonal to the top eigenspace; fix the phase of the last vector
    let col: Vec<Cx<T>> = (0..3).map(|i| vecs[(i, 2)]).collect();
    let pivot = col
        .iter()
        .copied()
        .max_by(|a, b| a.norm().partial_cmp(&b.norm()).unwrap_or(std::cmp::Ordering::Equal))
        .expect("three entries");
    let phase = pivot.conj() / pivot.norm();
    let r: Vec<T> = col.iter().map(|z| (*z * phase).re).collect();
    let norm = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
    [r[0] / norm, r[1] / norm, r[2] / norm]
}

/// Eigenbasis of a fixed generic Hermitian combination of the four parts.
fn canonical_basis<T: Real>(parts: &[SquareMatrix<T>; 4]) -> Result<SquareMatrix<T>> {
    let weights = [1.0, std::f64::consts::SQRT_2, 3f64.sqrt(), 5f64.sqrt()];
    let mut h = SquareMatrix::zeros(parts[0].dim());
    for (m, w) in parts.iter().zip(weights) {
        h = h.add_checked(&m.scale_real(T::lit(w)))?;
    }
    let dec = eig_hermitian(&HermitianMatrix::new(h)?)?;
    Ok(dec.eigenvectors.into_inner())
}

/// `z / |z|`, or `1` when `z` is too small for its phase to mean anything.
fn unit_phase<T: Real>(z: Cx<T>) -> Cx<T> {
    let r = z.norm();
    if r > T::epsilon().sqrt() {
        z / r
    } else {
        Complex::new(T::one(), T::zero())
    }
}

/// Jacobi sweeps stop once they improve their objective by less than this
/// fraction.
const SWEEP_GAIN_TOL: f64 = 1e-12;

/// Same for the diagonal-weight polish, whose sweeps cost far more.
const POLISH_GAIN_TOL: f64 = 1e-9;

/// Cap on polish sweeps; later sweeps move the distance by less than 1e-3.
const POLISH_SWEEPS: usize = 20;

/// `|a'_pp| + |a'_qq|` after the rotation `(c, s)` of the `(p, q)` block.
fn block_diagonal_weight<T: Real>(a: &SquareMatrix<T>, p: usize, q: usize, c: T, s: Cx<T>) -> T {
    let (pp, pq, qp, qq) = (a[(p, p)], a[(p, q)], a[(q, p)], a[(q, q)]);
    let new_pp = (pp * c + pq * s) * c + (qp * c + qq * s) * s.conj();
    let new_qq = (pq * c - pp * s.conj()) * (-s) + (qq * c - qp * s.conj()) * c;
    new_pp.norm() + new_qq.norm()
}

/// Pattern search over plane rotations maximizing `Σ_k |a_kk|` summed over
/// `mats`. For unitary inputs with unit-normalized diagonal phases this is
/// the Frobenius distance to the commuting approximant, and it separates
/// bases that the squared-diagonal objective cannot tell apart.
fn polish_diagonal_weight<T: Real>(mats: &mut [SquareMatrix<T>], w: &mut SquareMatrix<T>, max_sweeps: usize) {
    let n = w.dim();
    let directions = [
        Complex::new(T::one(), T::zero()),
        Complex::new(T::zero(), T::one()),
        Complex::new(-T::one(), T::zero()),
        Complex::new(T::zero(), -T::one()),
    ];
    // a step of δ gains O(δ²), so shorter steps cannot register
    let min_step = T::epsilon().sqrt();
    let tol = T::epsilon() * T::lit(16.0);
    for _ in 0..max_sweeps {
        let mut gained = T::zero();
        for p in 0..n {
            for q in p + 1..n {
                let mut step = T::lit(0.5);
                while step > min_step {
                    let current: T = mats.iter().map(|a| block_diagonal_weight(a, p, q, T::one(), czero())).sum();
                    let best = directions
                        .iter()
                        .map(|&d| {
                            let (c, s) = (step.cos(), d * step.sin());
                            let gain: T = mats.iter().map(|a| block_diagonal_weight(a, p, q, c, s)).sum::<T>() - current;
                            (gain, c, s)
                        })
                        .fold(None, |acc: Option<(T, T, Cx<T>)>, x| match acc {
                            Some(a) if a.0 >= x.0 => Some(a),
                            _ => Some(x),
                        })
                        .expect("four directions");
                    if best.0 > tol * (T::one() + current) {
                        for a in mats.iter_mut() {
                            rotate_pair(a, p, q, best.1, best.2);
                        }
                        rotate_columns(w, p, q, best.1, best.2);
                        gained = gained + best.0;
                    } else {
                        step = step * T::lit(0.5);
                    }
                }
            }
        }
        let total: T = mats.iter().map(|a| a.diagonal().iter().map(|z| z.norm()).sum::<T>()).sum();
        if gained <= T::lit(POLISH_GAIN_TOL) * total {
            return;
        }
    }
}

fn run_restart<T: Real>(
    u: &UnitaryMatrix<T>,
    v: &UnitaryMatrix<T>,
    start: SquareMatrix<T>,
    max_sweeps: usize,
) -> Result<(CommutingPair<T>, T, bool)> {
    let mut mats: Vec<SquareMatrix<T>> = hermitian_parts(u.matrix(), v.matrix())
        .iter()
        .map(|m| conjugate_by(&start, m))
        .collect::<Result<_>>()?;
    let mut w = start;
    let converged = joint_diagonalize(&mut mats, &mut w, max_sweeps);
    let mut rotated = [conjugate_by(&w, u.matrix())?, conjugate_by(&w, v.matrix())?];
    polish_diagonal_weight(&mut rotated, &mut w, max_sweeps.min(POLISH_SWEEPS));
    let [u_rot, v_rot] = rotated;
    let pair = CommutingPair {
        w: UnitaryMatrix::new_unchecked(w),
        phases_u: u_rot.diagonal().into_iter().map(unit_phase).collect(),
        phases_v: v_rot.diagonal().into_iter().map(unit_phase).collect(),
    };
    let du = operator_norm(&u.matrix().sub_checked(&pair.u())?)?;
    let dv = operator_norm(&v.matrix().sub_checked(&pair.v())?)?;
    Ok((pair, du.max(dv), converged))
}

/// Best commuting approximation found over `opts.restarts` Jacobi runs.
/// Restart 0 starts from a canonical eigenbasis; restart `r ≥ 1` from a
/// random unitary drawn from `(seed, r)`.
pub fn nearest_commuting<T: Real>(
    u: &UnitaryMatrix<T>,
    v: &UnitaryMatrix<T>,
    opts: &NearestOptions,
) -> Result<NearestResult<T>> {
    if u.dim() != v.dim() {
        return Err(Error::Dimension {
            expected: u.dim(),
            found: v.dim(),
        });
    }
    if opts.restarts == 0 || opts.max_iters == 0 {
        return Err(Error::InvalidArgument("restarts and max_iters must be positive".into()));
    }
    let n = u.dim();
    let parts = hermitian_parts(u.matrix(), v.matrix());
    let canonical = canonical_basis(&parts)?;
    let runs: Vec<(usize, CommutingPair<T>, T, bool)> = (0..opts.restarts)
        .into_par_iter()
        .map(|r| {
            let start = if r == 0 {
                canonical.clone()
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
                rng.set_stream(r as u64);
                random_unitary::<T, _>(n, &mut rng).into_inner()
            };
            run_restart(u, v, start, opts.max_iters).map(|(p, d, c)| (r, p, d, c))
        })
        .collect::<Result<_>>()?;
    let (restart, pair, distance, converged) = runs
        .into_iter()
        .min_by(|a, b| a.2.partial_cmp(&b.2).unwrap_or(std::cmp::Ordering::Equal).then(a.0.cmp(&b.0)))
        .expect("at least one restart");
    Ok(NearestResult {
        pair,
        distance,
        converged,
        restart,
    })
}

/// Truncated Fourier data of a circle function.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FourierWeight {
    /// `Σ_{0<|m|≤M} |m| |k̂(m)|`
    pub head: f64,
    /// Bound on `Σ_{|m|>M} |m| |k̂(m)|`
    pub tail: f64,
    /// Fitted decay exponent `p` in `|k̂(m)| ≤ A|m|^{−p}`.
    pub exponent: f64,
}

impl FourierWeight {
    pub fn total(&self) -> f64 {
        self.head + self.tail
    }
}

/// `k̂(m) = ∫₀¹ k(x) e^{−2πimx} dx` for `|m| ≤ modes`, by the rectangle rule
/// on `points` nodes.
pub fn fourier_coefficients(k: impl Fn(f64) -> f64, points: usize, modes: usize) -> Vec<(i64, Cx<f64>)> {
    let samples: Vec<f64> = (0..points).map(|j| k(j as f64 / points as f64)).collect();
    let roots: Vec<Cx<f64>> = (0..points)
        .map(|j| Complex::from_polar(1.0, -std::f64::consts::TAU * j as f64 / points as f64))
        .collect();
    let m_max = modes as i64;
    (-m_max..=m_max)
        .map(|m| {
            let step = m.rem_euclid(points as i64) as usize;
            let mut idx = 0usize;
            let mut acc = Complex::new(0.0, 0.0);
            for &s in &samples {
                acc += roots[idx] * s;
                idx = (idx + step) % points;
            }
            (m, acc / points as f64)
        })
        .collect()
}

/// `Σ_m |m| |k̂(m)|` with a fitted tail beyond [`FOURIER_MODES`].
pub fn fourier_weight(k: impl Fn(f64) -> f64) -> Result<FourierWeight> {
    let coeffs = fourier_coefficients(k, FOURIER_POINTS, FOURIER_MODES);
    let m_max = FOURIER_MODES;
    // |k̂(m)| + |k̂(−m)| per m ≥ 1
    let mut mag = vec![0.0f64; m_max + 1];
    for &(m, c) in &coeffs {
        if m != 0 {
            mag[m.unsigned_abs() as usize] += c.norm();
        }
    }
    let head: f64 = (1..=m_max).map(|m| m as f64 * mag[m]).sum();
    // decreasing envelope, fitted on the upper half of the range
    let mut env = mag.clone();
    for m in (1..m_max).rev() {
        env[m] = env[m].max(env[m + 1]);
    }
    let lo = m_max / 8;
    let pts: Vec<(f64, f64)> = (lo..=m_max)
        .filter(|&m| env[m] > 0.0)
        .map(|m| ((m as f64).ln(), env[m].ln()))
        .collect();
    let peak = mag.iter().copied().fold(0.0f64, f64::max);
    if pts.len() < 2 || env[lo] <= NOISE_FLOOR * peak {
        return Ok(FourierWeight {
            head,
            tail: 0.0,
            exponent: f64::INFINITY,
        });
    }
    let count = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (sx / count, sy / count);
    let (sxy, sxx) = pts
        .iter()
        .fold((0.0, 0.0), |(a, b), (x, y)| (a + (x - mx) * (y - my), b + (x - mx) * (x - mx)));
    let exponent = -sxy / sxx;
    if !(exponent > MIN_DECAY_EXPONENT) {
        return Err(Error::NonSummableSymbol { exponent });
    }
    // smallest A with env(m) ≤ A m^{−p} over the fitted range
    let amp = (lo..=m_max)
        .map(|m| env[m] * (m as f64).powf(exponent))
        .fold(0.0f64, f64::max);
    let mf = m_max as f64;
    // Σ_{m>M} m·A m^{−p} ≤ A M^{2−p}/(p−2); mag already sums ±m
    let tail = TAIL_SAFETY * amp * mf.powf(2.0 - exponent) / (exponent - 2.0);
    Ok(FourierWeight { head, tail, exponent })
}

/// `Σ_m |m| (|f̂(m)| + |ĝ(m)| + |ĥ(m)|) + 1`, bounding the Lipschitz
/// constant of `(u, v) ↦ e(u, v)` in the max of the operator-norm distances.
pub fn loring_lipschitz_constant<T: Real>(triple: &SymbolTriple<T>) -> Result<f64> {
    let w = |k: &dyn Fn(T) -> T| fourier_weight(|x| k(T::lit(x)).to_f64_lossy());
    let f = w(&|x| triple.f(x))?;
    let g = w(&|x| triple.g(x))?;
    let h = w(&|x| triple.h(x))?;
    Ok(f.total() + g.total() + h.total() + 1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ObstructionBound {
    /// No commuting pair lies within this distance of `(u, v)`.
    pub epsilon_lower: f64,
    pub gap_used: f64,
    pub lip_const: f64,
    pub index: i64,
}

/// `gap / L` when the index is nonzero, `0` otherwise.
pub fn obstruction_lower_bound<T: Real>(
    u: &UnitaryMatrix<T>,
    v: &UnitaryMatrix<T>,
    triple: &SymbolTriple<T>,
) -> Result<ObstructionBound> {
    let r = bott_index(u, v, triple, T::lit(DEFAULT_GAP_MIN))?;
    let lip_const = loring_lipschitz_constant(triple)?;
    let gap = r.gap.to_f64_lossy();
    Ok(ObstructionBound {
        epsilon_lower: if r.index != 0 { gap / lip_const } else { 0.0 },
        gap_used: gap,
        lip_const,
        index: r.index,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EpsilonRow {
    pub n: usize,
    pub index: Option<i64>,
    pub epsilon_lower: f64,
    pub heuristic_distance: f64,
    pub converged: bool,
    /// `heuristic_distance ≥ epsilon_lower`
    pub sound: bool,
    /// Set when the row could not be computed.
    pub error: Option<String>,
}

/// Heuristic distance and certified bound for the clock and backward shift
/// of each size.
pub fn epsilon_sweep<T: Real>(n_values: &[usize], triple: &SymbolTriple<T>, opts: &NearestOptions) -> Vec<EpsilonRow> {
    n_values
        .iter()
        .map(|&n| {
            let u = clock::<T>(n);
            let b = cyclic_shift(n, ShiftOrientation::Backward);
            let row = obstruction_lower_bound(&u, &b, triple).and_then(|bound| {
                let near = nearest_commuting(&u, &b, opts)?;
                Ok((bound, near))
            });
            match row {
                Ok((bound, near)) => {
                    let d = near.distance.to_f64_lossy();
                    EpsilonRow {
                        n,
                        index: Some(bound.index),
                        epsilon_lower: bound.epsilon_lower,
                        heuristic_distance: d,
                        converged: near.converged,
                        sound: d >= bound.epsilon_lower,
                        error: None,
                    }
                }
                Err(e) => EpsilonRow {
                    n,
                    index: None,
                    epsilon_lower: 0.0,
                    heuristic_distance: f64::NAN,
                    converged: false,
                    sound: false,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect()
}
