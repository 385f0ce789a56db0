//! Quantitative sweeps over `N` of the Loring element `e_N = e(u_N, b_N)`
//! of the clock and backward cyclic shift, and the inequalities that turn
//! its large-`N` behaviour into checks:
//!
//! * `‖χ(e) − e‖ ≤ 2‖e² − e‖` and `N‖χ(e) − e‖` bounded,
//! * `tr χ(e) − tr(3e² − 2e³)` of order `1/N`,
//! * `tr e² = N` exactly,
//! * `tr e³ − (N − ½) → 0`, with the matrix-free Riemann sum
//!   `3 Σ_k h(x_k)² (f(x_k) − f(x_{k−1}))` converging to `½`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loring::{
    chi_distance, gap_from_eigenvalues, idempotent_defect, loring_element, projection_trace, DEFAULT_GAP_MIN,
    INDEX_ROUNDING_SLACK,
};
use crate::matrix::{eig_hermitian, operator_norm, SquareMatrix};
use crate::model::{clock, cyclic_shift, ShiftOrientation};
use crate::scalar::{Cx, Real};
use crate::symbols::{lipschitz_bound, SymbolTriple, LIPSCHITZ_GRID};

/// Size at which the projection-distance and cubic-trace constants are calibrated.
pub const CALIBRATION_N: usize = 8;

/// Factor applied to calibrated constants before freezing them.
pub const CALIBRATION_FACTOR: f64 = 1.5;

/// Allowed growth between consecutive deviations in monotonicity checks.
pub const MONOTONE_SLACK: f64 = 1.2;

/// Bound on `|tr e³ − (N − ½)|` at the largest swept `N ≥ 128`.
pub const CUBIC_TRACE_TOL: f64 = 0.05;

/// Size of the Riemann sum checked against `½`, and its tolerance.
pub const RIEMANN_N: usize = 512;
pub const RIEMANN_TOL: f64 = 0.02;

/// Slack on the commutator bound `2π Lip(k) / N`.
pub const COMMUTATOR_BOUND_FACTOR: f64 = 1.1;

/// Exact CSV header of a sweep.
pub const CSV_HEADER: [&str; 9] = [
    "N",
    "tr_e",
    "tr_e2",
    "tr_e3",
    "norm_chi_minus_e",
    "norm_e2_minus_e",
    "gap",
    "raw_index",
    "index",
];

/// One row of a sweep. A row whose gap at ½ does not exceed the gap
/// threshold is flagged: `gap` is reported as 0 and `index` is absent.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord<T> {
    #[serde(rename = "N")]
    pub n: usize,
    pub tr_e: T,
    pub tr_e2: T,
    pub tr_e3: T,
    pub norm_chi_minus_e: T,
    pub norm_e2_minus_e: T,
    pub gap: T,
    pub raw_index: T,
    pub index: Option<i64>,
}

impl<T: Real> SweepRecord<T> {
    pub fn is_flagged(&self) -> bool {
        self.index.is_none()
    }

    /// `tr χ(e)`.
    pub fn trace_chi(&self) -> T {
        self.raw_index + T::from_usize_lossy(self.n)
    }

    /// `|tr χ(e) − (3 tr e² − 2 tr e³)|`.
    pub fn step2_deviation(&self) -> T {
        (self.trace_chi() - (T::lit(3.0) * self.tr_e2 - T::lit(2.0) * self.tr_e3)).abs()
    }

    /// `|tr e³ − (N − ½)|`.
    pub fn cubic_deviation(&self) -> T {
        (self.tr_e3 - (T::from_usize_lossy(self.n) - T::lit(0.5))).abs()
    }
}

/// One sweep row for `N`, with the default gap threshold.
pub fn sweep_record<T: Real>(n: usize, triple: &SymbolTriple<T>) -> Result<SweepRecord<T>> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("sweep needs N ≥ 2, got {n}")));
    }
    let u = clock::<T>(n);
    let b = cyclic_shift(n, ShiftOrientation::Backward);
    let e = loring_element(&u, &b, triple)?;
    let m = e.matrix.matrix();
    let e2 = m.matmul(m)?;
    let dec = eig_hermitian(&e.matrix)?;
    let nf = T::from_usize_lossy(n);
    let raw = projection_trace(&dec) - nf;
    let gap = gap_from_eigenvalues(&dec.eigenvalues);
    let rounded = raw.round();
    let certified = gap > T::lit(DEFAULT_GAP_MIN) && (raw - rounded).abs() <= T::lit(INDEX_ROUNDING_SLACK);
    Ok(SweepRecord {
        n,
        tr_e: e.trace(),
        tr_e2: e2.trace().re,
        tr_e3: e2.trace_of_product(m)?.re,
        norm_chi_minus_e: chi_distance(&dec.eigenvalues),
        norm_e2_minus_e: idempotent_defect(&dec.eigenvalues),
        gap: if certified { gap } else { T::zero() },
        raw_index: raw,
        index: certified.then(|| rounded.to_i64().expect("index fits in i64")),
    })
}

/// Rows for each `N`, in input order.
pub fn sweep<T: Real>(n_values: &[usize], triple: &SymbolTriple<T>) -> Result<Vec<SweepRecord<T>>> {
    n_values.par_iter().map(|&n| sweep_record(n, triple)).collect()
}

/// Frozen constants for the projection-distance and cubic-trace rate bounds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    /// Cap on `N‖χ(e) − e‖`.
    pub c_cap: f64,
    /// `2|tr e³ − (N − ½)|` must stay below `2D/N`.
    pub d: f64,
}

impl Calibration {
    /// Values of [`Calibration::calibrate`] for the raised-cosine triple,
    /// rounded up in the fifth digit.
    pub const RAISED_COSINE: Calibration = Calibration {
        c_cap: 3.378,
        d: 0.56802,
    };

    /// Measures at `N = 8` and multiplies by 1.5.
    pub fn calibrate<T: Real>(triple: &SymbolTriple<T>) -> Result<Self> {
        let r = sweep_record(CALIBRATION_N, triple)?;
        if r.is_flagged() {
            return Err(Error::GapClosed {
                gap: 0.0,
                gap_min: DEFAULT_GAP_MIN,
            });
        }
        let n = CALIBRATION_N as f64;
        Ok(Self {
            c_cap: CALIBRATION_FACTOR * n * r.norm_chi_minus_e.to_f64_lossy(),
            d: CALIBRATION_FACTOR * r.step2_deviation().to_f64_lossy() * n / 2.0,
        })
    }
}

fn exact_trace_tol<T: Real>(n: usize) -> T {
    T::lit(1e-8).max(T::from_usize_lossy(n) * T::epsilon() * T::lit(100.0))
}

/// `‖χ(e) − e‖ ≤ 2‖e² − e‖ + 1e-10` and `N‖χ(e) − e‖ ≤ C_cap`.
pub fn step1_check<T: Real>(r: &SweepRecord<T>, cal: &Calibration) -> bool {
    let slack = T::lit(1e-10).max(T::epsilon() * T::lit(100.0));
    !r.is_flagged()
        && r.norm_chi_minus_e <= T::lit(2.0) * r.norm_e2_minus_e + slack
        && T::from_usize_lossy(r.n) * r.norm_chi_minus_e <= T::lit(cal.c_cap)
}

/// `|tr χ(e) − (3 tr e² − 2 tr e³)| ≤ 2D/N`.
pub fn step2_check<T: Real>(r: &SweepRecord<T>, cal: &Calibration) -> bool {
    !r.is_flagged() && r.step2_deviation() <= T::lit(2.0 * cal.d) / T::from_usize_lossy(r.n)
}

/// `|tr e² − N| ≤ 1e-8`.
pub fn step3_check<T: Real>(r: &SweepRecord<T>) -> bool {
    (r.tr_e2 - T::from_usize_lossy(r.n)).abs() <= exact_trace_tol::<T>(r.n)
}

/// `|tr e − N| ≤ 1e-8`.
pub fn trace_check<T: Real>(r: &SweepRecord<T>) -> bool {
    (r.tr_e - T::from_usize_lossy(r.n)).abs() <= exact_trace_tol::<T>(r.n)
}

/// Each value at most `slack` times the previous one.
pub fn is_monotone_within<T: Real>(values: &[T], slack: f64) -> bool {
    values.windows(2).all(|w| w[1] <= w[0] * T::lit(slack))
}

/// `3 Σ_{k=1}^{N} h(x_k)² (f(x_k) − f(x_{k−1}))` with `x_k = k/N`.
pub fn riemann_sum<T: Real>(triple: &SymbolTriple<T>, n: usize) -> T {
    let nf = T::from_usize_lossy(n);
    let three = T::lit(3.0);
    (1..=n)
        .map(|k| {
            let x = T::from_usize_lossy(k) / nf;
            let prev = T::from_usize_lossy(k - 1) / nf;
            let h = triple.h(x);
            three * h * h * (triple.f(x) - triple.f(prev))
        })
        .sum()
}

/// `3 ∫₀¹ (λ − λ²) dλ` by composite Simpson's rule on `intervals` (even)
/// subintervals.
pub fn lambda_integral<T: Real>(intervals: usize) -> T {
    let n = intervals.max(2) + intervals % 2;
    let step = T::one() / T::from_usize_lossy(n);
    let g = |l: T| T::lit(3.0) * (l - l * l);
    let interior: T = (1..n)
        .map(|i| {
            let w = if i % 2 == 1 { T::lit(4.0) } else { T::lit(2.0) };
            w * g(T::from_usize_lossy(i) * step)
        })
        .sum();
    (g(T::zero()) + g(T::one()) + interior) * step / T::lit(3.0)
}

/// Summary of the cubic-trace check.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Step4Report<T> {
    pub monotone: bool,
    /// `|tr e³ − (N − ½)|` at the largest `N`.
    pub final_deviation: T,
    pub final_n: usize,
    pub riemann_sum: T,
    pub lambda_integral: T,
    pub passed: bool,
}

pub fn step4_report<T: Real>(records: &[SweepRecord<T>], triple: &SymbolTriple<T>) -> Step4Report<T> {
    let increasing = records.windows(2).all(|w| w[0].n < w[1].n);
    let deviations: Vec<T> = records.iter().map(SweepRecord::cubic_deviation).collect();
    let monotone = increasing && is_monotone_within(&deviations, MONOTONE_SLACK);
    let last = records.last();
    let final_n = last.map_or(0, |r| r.n);
    let final_deviation = last.map_or(T::infinity(), SweepRecord::cubic_deviation);
    let large_ok = final_n < 128 || final_deviation <= T::lit(CUBIC_TRACE_TOL);
    let riemann = riemann_sum(triple, RIEMANN_N);
    let lambda = lambda_integral::<T>(64);
    let half = T::lit(0.5);
    let quadrature_ok =
        (riemann - half).abs() <= T::lit(RIEMANN_TOL) && (lambda - half).abs() <= T::lit(RIEMANN_TOL);
    Step4Report {
        monotone,
        final_deviation,
        final_n,
        riemann_sum: riemann,
        lambda_integral: lambda,
        passed: records.len() >= 2 && monotone && large_ok && quadrature_ok,
    }
}

/// `|tr e³ − (N − ½)|` non-increasing (up to ×1.2), at most 0.05 at the
/// largest `N ≥ 128`, and the Riemann sum at `N = 512` within 0.02 of ½.
pub fn step4_check<T: Real>(records: &[SweepRecord<T>], triple: &SymbolTriple<T>) -> bool {
    step4_report(records, triple).passed
}

/// `‖[k(u_N), b_N]‖` for `k` given in the circle coordinate `x ∈ [0, 1)`.
pub fn shift_commutator_norm<T: Real>(k: impl Fn(T) -> Cx<T>, n: usize) -> Result<T> {
    let nf = T::from_usize_lossy(n);
    let diag: Vec<Cx<T>> = (0..n).map(|j| k(T::from_usize_lossy(j) / nf)).collect();
    let ku = SquareMatrix::from_diag(&diag);
    let b = cyclic_shift::<T>(n, ShiftOrientation::Backward);
    let c = ku.matmul(b.matrix())?.sub_checked(&b.matrix().matmul(&ku)?)?;
    operator_norm(&c)
}

/// `2π Lip(k) / N · 1.1`.
pub fn shift_commutator_bound<T: Real>(k: impl Fn(T) -> Cx<T>, n: usize) -> T {
    T::TAU() * lipschitz_bound(k, LIPSCHITZ_GRID) / T::from_usize_lossy(n) * T::lit(COMMUTATOR_BOUND_FACTOR)
}

/// `‖[k(u_N), b_N]‖ ≤ 2π Lip(k) / N · 1.1`.
pub fn lipschitz_commutator_check<T: Real>(k: impl Fn(T) -> Cx<T>, n: usize) -> Result<bool> {
    Ok(shift_commutator_norm(&k, n)? <= shift_commutator_bound(&k, n))
}

/// Header line and one line per record. Floats use 12 significant digits;
/// flagged rows leave `index` empty.
pub fn records_to_csv<T: Real>(records: &[SweepRecord<T>]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Numerical(format!("csv: {e}"));
    w.write_record(CSV_HEADER).map_err(io)?;
    for r in records {
        let g = |x: T| format_significant(x.to_f64_lossy(), 12);
        w.write_record([
            r.n.to_string(),
            g(r.tr_e),
            g(r.tr_e2),
            g(r.tr_e3),
            g(r.norm_chi_minus_e),
            g(r.norm_e2_minus_e),
            g(r.gap),
            g(r.raw_index),
            r.index.map(|i| i.to_string()).unwrap_or_default(),
        ])
        .map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Numerical(format!("csv: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::Numerical(format!("csv: {e}")))
}

/// C's `%.{digits}g`: shortest of fixed or scientific notation at the
/// given number of significant digits, trailing zeros removed.
pub fn format_significant(x: f64, digits: usize) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= digits as i32 {
        let mantissa = strip_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        strip_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex;
    use crate::scalar::circle_point;
    use crate::symbols::default_triple;

    #[test]
    fn percent_g_formatting() {
        assert_eq!(format_significant(1.0, 12), "1");
        assert_eq!(format_significant(32.0, 12), "32");
        assert_eq!(format_significant(0.5, 12), "0.5");
        assert_eq!(format_significant(1.0 / 3.0, 12), "0.333333333333");
        assert_eq!(format_significant(2.0 / 3.0 * 100.0, 12), "66.6666666667");
        assert_eq!(format_significant(1.5e-5, 12), "1.5e-05");
        assert_eq!(format_significant(-2.25e-13, 12), "-2.25e-13");
        assert_eq!(format_significant(1e12, 12), "1e+12");
        assert_eq!(format_significant(123456789012.0, 12), "123456789012");
        assert_eq!(format_significant(0.0001, 12), "0.0001");
        assert_eq!(format_significant(0.0, 12), "0");
        assert_eq!(format_significant(9.9999999999999e-5, 12), "0.0001");
    }

    #[test]
    fn smallest_size_has_trace_two() {
        let r = sweep_record(2, &default_triple::<f64>()).unwrap();
        assert!((r.tr_e - 2.0).abs() <= 1e-10);
        assert!((r.tr_e2 - 2.0).abs() <= 1e-10);
    }

    #[test]
    fn row_at_32() {
        let r = sweep_record(32, &default_triple::<f64>()).unwrap();
        assert!((r.tr_e2 - 32.0).abs() <= 1e-8);
        assert_eq!(r.index, Some(1));
        assert!(step3_check(&r));
        assert!(trace_check(&r));
    }

    #[test]
    fn frozen_calibration_matches_measurement() {
        let cal = Calibration::calibrate(&default_triple::<f64>()).unwrap();
        let frozen = Calibration::RAISED_COSINE;
        assert!(frozen.c_cap >= cal.c_cap && frozen.c_cap - cal.c_cap < 1e-4, "{cal:?}");
        assert!(frozen.d >= cal.d && frozen.d - cal.d < 1e-4, "{cal:?}");
    }

    #[test]
    fn cubic_trace_matches_riemann_sum_exactly() {
        let t = default_triple::<f64>();
        for n in [8usize, 16, 40] {
            let r = sweep_record(n, &t).unwrap();
            let rs = riemann_sum(&t, n);
            assert!((r.tr_e3 - n as f64 + rs).abs() < 1e-10, "n = {n}");
        }
    }

    #[test]
    fn quadrature_limits() {
        assert!((lambda_integral::<f64>(64) - 0.5).abs() < 1e-14);
        assert!((riemann_sum(&default_triple::<f64>(), RIEMANN_N) - 0.5).abs() <= RIEMANN_TOL);
    }

    #[test]
    fn scalar_instances() {
        // χ(0.6) − 0.6 = 0.4 ≤ 2|0.36 − 0.6| = 0.48
        assert!(chi_distance(&[0.6f64]) <= 2.0 * idempotent_defect(&[0.6f64]));
        let p = |x: f64| 3.0 * x * x - 2.0 * x * x * x;
        assert_eq!(p(0.0), 0.0);
        assert_eq!(p(1.0), 1.0);
    }

    #[test]
    fn step_checks_on_small_sweep() {
        let t = default_triple::<f64>();
        let cal = Calibration::RAISED_COSINE;
        let rows = sweep(&[16, 32, 64], &t).unwrap();
        assert_eq!(rows.iter().map(|r| r.n).collect::<Vec<_>>(), vec![16, 32, 64]);
        for r in &rows {
            assert!(step1_check(r, &cal));
            assert!(step2_check(r, &cal));
            assert!(step3_check(r));
        }
        let scaled: Vec<f64> = rows.iter().map(|r| r.n as f64 * r.norm_chi_minus_e).collect();
        assert!(scaled[0] / scaled[2] < 1.5 && scaled[2] / scaled[0] < 1.5);
        let report = step4_report(&rows, &t);
        assert!(report.monotone);
        assert!(report.passed);
    }

    #[test]
    fn step2_is_twice_cubic_deviation() {
        let r = sweep_record(16, &default_triple::<f64>()).unwrap();
        assert!((r.step2_deviation() - 2.0 * r.cubic_deviation()).abs() < 1e-10);
    }

    #[test]
    fn commutator_bounds() {
        let t = default_triple::<f64>();
        assert_eq!(shift_commutator_norm(|_: f64| Complex::new(0.3, 0.0), 8).unwrap(), 0.0);
        assert!(lipschitz_commutator_check(|_: f64| Complex::new(0.3, 0.0), 8).unwrap());
        assert!(lipschitz_commutator_check(|x| Complex::new(t.f(x), 0.0), 32).unwrap());
        let lhs = shift_commutator_norm(circle_point::<f64>, 16).unwrap();
        assert!((lhs - 2.0 * (std::f64::consts::PI / 16.0).sin()).abs() < 1e-12);
        assert!(lipschitz_commutator_check(circle_point::<f64>, 16).unwrap());
    }

    #[test]
    fn csv_layout() {
        let rows = sweep(&[8], &default_triple::<f64>()).unwrap();
        let text = records_to_csv(&rows).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER.join(","));
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(row[0], "8");
        assert_eq!(row[1], "8");
        assert_eq!(row[8], "1");
        assert!(lines.next().is_none());
    }

    #[test]
    fn rejects_tiny_n() {
        assert!(sweep_record(1, &default_triple::<f64>()).is_err());
    }
}
