//! Complex Schur decomposition by Hessenberg reduction and shifted QR.
//! Used for normal (in practice unitary) matrices, whose Schur form is
//! diagonal. Kept in-house because nalgebra's `Schur` stalls on cyclic
//! permutation matrices such as the shift.

use num_complex::Complex;
use num_traits::Zero;

use super::dense::SquareMatrix;
use crate::error::{Error, Result};
use crate::scalar::{czero, Cx, Real};

/// Returns `(T, Z)` with `A = Z T Z*`, `Z` unitary and `T` upper triangular.
pub(crate) fn complex_schur<T: Real>(m: &SquareMatrix<T>) -> Result<(SquareMatrix<T>, SquareMatrix<T>)> {
    let n = m.dim();
    let mut h = m.clone();
    let mut z = SquareMatrix::<T>::identity(n);
    hessenberg(&mut h, &mut z);
    qr_iterate(&mut h, &mut z)?;
    Ok((h, z))
}

fn hessenberg<T: Real>(h: &mut SquareMatrix<T>, z: &mut SquareMatrix<T>) {
    let n = h.dim();
    let two = T::lit(2.0);
    let mut v = vec![czero::<T>(); n];
    for k in 0..n.saturating_sub(2) {
        let lo = k + 1;
        let tail: T = (lo + 1..n).map(|i| h[(i, k)].norm_sqr()).sum();
        if tail.is_zero() {
            continue;
        }
        let x0 = h[(lo, k)];
        let xnorm = (tail + x0.norm_sqr()).sqrt();
        let phase = if x0.is_zero() {
            Complex::new(T::one(), T::zero())
        } else {
            x0 / x0.norm()
        };
        let alpha = -phase * xnorm;
        for i in lo..n {
            v[i] = h[(i, k)];
        }
        v[lo] = v[lo] - alpha;
        let vnorm = (lo..n).map(|i| v[i].norm_sqr()).sum::<T>().sqrt();
        for vi in &mut v[lo..n] {
            *vi = *vi / vnorm;
        }
        // left: rows lo.., columns k..
        for j in k..n {
            let s = (lo..n).fold(czero::<T>(), |acc, i| acc + v[i].conj() * h[(i, j)]);
            for i in lo..n {
                h[(i, j)] = h[(i, j)] - v[i] * s * two;
            }
        }
        // right: all rows, columns lo..
        for target in [&mut *h, &mut *z] {
            for r in 0..n {
                let s = (lo..n).fold(czero::<T>(), |acc, j| acc + target[(r, j)] * v[j]);
                for j in lo..n {
                    target[(r, j)] = target[(r, j)] - s * v[j].conj() * two;
                }
            }
        }
        for i in lo + 1..n {
            h[(i, k)] = czero();
        }
    }
}

/// Rotation `[[c, s], [-s̄, c]]` mapping `(x, y)` to `(r, 0)`.
fn givens<T: Real>(x: Cx<T>, y: Cx<T>) -> (T, Cx<T>) {
    if y.is_zero() {
        return (T::one(), czero());
    }
    if x.is_zero() {
        return (T::zero(), Complex::new(T::one(), T::zero()));
    }
    let ax = x.norm();
    let norm = ax.hypot(y.norm());
    let c = ax / norm;
    let s = (x / ax) * y.conj() / norm;
    (c, s)
}

fn rotate_rows<T: Real>(h: &mut SquareMatrix<T>, k: usize, c: T, s: Cx<T>, from: usize) {
    let n = h.dim();
    for j in from..n {
        let (a, b) = (h[(k, j)], h[(k + 1, j)]);
        h[(k, j)] = a * c + s * b;
        h[(k + 1, j)] = b * c - s.conj() * a;
    }
}

fn rotate_cols<T: Real>(h: &mut SquareMatrix<T>, k: usize, c: T, s: Cx<T>, to: usize) {
    for i in 0..to {
        let (a, b) = (h[(i, k)], h[(i, k + 1)]);
        h[(i, k)] = a * c + b * s.conj();
        h[(i, k + 1)] = b * c - a * s;
    }
}

fn qr_iterate<T: Real>(h: &mut SquareMatrix<T>, z: &mut SquareMatrix<T>) -> Result<()> {
    let n = h.dim();
    if n < 2 {
        return Ok(());
    }
    let ulp = T::epsilon();
    let hnorm = h.frobenius_norm().max(T::min_positive_value());
    let max_iters = 30 * n.max(10);
    let mut hi = n - 1;
    let mut its = 0usize;
    let mut total = 0usize;

    while hi > 0 {
        let mut l = hi;
        while l > 0 {
            let scale = h[(l - 1, l - 1)].norm() + h[(l, l)].norm();
            let scale = if scale.is_zero() { hnorm } else { scale };
            if h[(l, l - 1)].norm() <= ulp * scale {
                h[(l, l - 1)] = czero();
                break;
            }
            l -= 1;
        }
        if l == hi {
            hi -= 1;
            its = 0;
            continue;
        }
        its += 1;
        total += 1;
        if total > max_iters {
            return Err(Error::Numerical("complex Schur QR iteration did not converge".into()));
        }

        let mu = if its.is_multiple_of(10) {
            // exceptional shift breaks the cycles unshifted QR falls into
            // on permutation-like matrices
            h[(hi, hi)] + Complex::new(T::lit(0.75), T::lit(0.43)) * h[(hi, hi - 1)].norm()
        } else {
            let a = h[(hi - 1, hi - 1)];
            let b = h[(hi - 1, hi)];
            let c = h[(hi, hi - 1)];
            let d = h[(hi, hi)];
            let half = T::lit(0.5);
            let mean = (a + d) * half;
            let disc = (((a - d) * half) * ((a - d) * half) + b * c).sqrt();
            let (r1, r2) = (mean + disc, mean - disc);
            if (r1 - d).norm() <= (r2 - d).norm() {
                r1
            } else {
                r2
            }
        };

        let mut x = h[(l, l)] - mu;
        let mut y = h[(l + 1, l)];
        for k in l..hi {
            let (c, s) = givens(x, y);
            let from = if k > l { k - 1 } else { k };
            rotate_rows(h, k, c, s, from);
            let to = (k + 3).min(hi + 1).min(n);
            rotate_cols(h, k, c, s, to.max(k + 2));
            rotate_cols(z, k, c, s, n);
            if k > l {
                h[(k + 1, k - 1)] = czero();
            }
            if k + 1 < hi {
                x = h[(k + 1, k)];
                y = h[(k + 2, k)];
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Cx<f64> {
        Complex::new(re, im)
    }

    fn check(m: &SquareMatrix<f64>, tol: f64) -> SquareMatrix<f64> {
        let (t, z) = complex_schur(m).unwrap();
        let n = m.dim();
        let back = &(&z * &t) * &z.adjoint();
        assert!((&back - m).max_abs() < tol, "reconstruction {}", (&back - m).max_abs());
        let orth = (&z.adjoint_matmul(&z).unwrap() - &SquareMatrix::identity(n)).max_abs();
        assert!(orth < tol, "orthogonality {orth}");
        for i in 0..n {
            for j in 0..i {
                assert!(t[(i, j)].norm() < tol, "T not triangular at ({i},{j})");
            }
        }
        t
    }

    #[test]
    fn cyclic_permutation_converges() {
        // the cyclic shift is a fixed point of unshifted QR
        for n in [2, 3, 8, 17] {
            let p = SquareMatrix::from_fn(n, |i, j| if i == (j + 1) % n { c(1.0, 0.0) } else { c(0.0, 0.0) });
            let t = check(&p, 1e-12);
            for i in 0..n {
                assert!((t[(i, i)].norm() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn general_complex_matrix() {
        let m = SquareMatrix::from_fn(7, |i, j| c(((i * 7 + j) as f64).sin(), ((i + 3 * j) as f64).cos()));
        check(&m, 1e-12);
    }

    #[test]
    fn diagonal_is_untouched() {
        let m = SquareMatrix::from_diag(&[c(0.0, 1.0), c(1.0, 0.0), c(-1.0, 0.0)]);
        let (t, z) = complex_schur(&m).unwrap();
        assert_eq!(t, m);
        assert_eq!(z, SquareMatrix::identity(3));
    }
}
