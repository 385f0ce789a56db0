//! The symbol triple `(f, g, h)` on the circle from which Loring elements
//! are built.
//!
//! Functions take the circle coordinate `x ∈ [0, 1)` of the point
//! `e^{2πix}`; arguments outside that range are wrapped. A valid triple
//! satisfies `f² + g² + h² = f`, `g·h = 0`, `f(0) = 1`, `g(0) = h(0) = 0`
//! and takes values in `[0, 1]`.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::{circle_coord, wrap_unit, Cx, Real};

/// A real function of the circle coordinate.
pub type CircleFn<T> = Arc<dyn Fn(T) -> T + Send + Sync>;

/// Grid used to certify Lipschitz constants of the built-in triples.
pub const LIPSCHITZ_GRID: usize = 10_000;

/// Safety factor applied to grid estimates of Lipschitz constants.
pub const LIPSCHITZ_SAFETY: f64 = 1.1;

#[derive(Clone)]
pub struct SymbolTriple<T> {
    name: String,
    f: CircleFn<T>,
    g: CircleFn<T>,
    h: CircleFn<T>,
    pub lipschitz_f: T,
    pub lipschitz_g: T,
    pub lipschitz_h: T,
}

impl<T: fmt::Debug> fmt::Debug for SymbolTriple<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SymbolTriple")
            .field("name", &self.name)
            .field("lipschitz_f", &self.lipschitz_f)
            .field("lipschitz_g", &self.lipschitz_g)
            .field("lipschitz_h", &self.lipschitz_h)
            .finish()
    }
}

impl<T: Real> SymbolTriple<T> {
    /// Wraps three functions and certifies their Lipschitz constants on a
    /// grid. The identities are not checked here; see [`validate_triple`].
    pub fn from_fns(
        name: impl Into<String>,
        f: impl Fn(T) -> T + Send + Sync + 'static,
        g: impl Fn(T) -> T + Send + Sync + 'static,
        h: impl Fn(T) -> T + Send + Sync + 'static,
    ) -> Self {
        let f: CircleFn<T> = Arc::new(f);
        let g: CircleFn<T> = Arc::new(g);
        let h: CircleFn<T> = Arc::new(h);
        let lip = |k: &CircleFn<T>| {
            let k = k.clone();
            lipschitz_bound(move |x| Complex::new(k(wrap_unit(x)), T::zero()), LIPSCHITZ_GRID)
        };
        Self {
            name: name.into(),
            lipschitz_f: lip(&f),
            lipschitz_g: lip(&g),
            lipschitz_h: lip(&h),
            f,
            g,
            h,
        }
    }

    /// `f(x) = (1 + cos 2πx)/2`, with `g = √(f − f²)` on `[0, ½)` and
    /// `h = √(f − f²)` on `[½, 1)`, each zero elsewhere.
    pub fn raised_cosine() -> Self {
        let f = |x: T| (T::one() + (T::TAU() * x).cos()) * T::lit(0.5);
        let bump = move |x: T| {
            let fx = f(x);
            (fx - fx * fx).max(T::zero()).sqrt()
        };
        let half = T::lit(0.5);
        Self::from_fns(
            "raised-cosine",
            f,
            move |x| if x < half { bump(x) } else { T::zero() },
            move |x| if x >= half { bump(x) } else { T::zero() },
        )
    }

    /// A C¹ variant of the raised cosine: `f = cos²(πs(2x)/2)` on `[0, ½]`
    /// with the smoothstep `s(y) = 3y² − 2y³`, mirrored on `[½, 1)`. `g` and
    /// `h` are `sin(πs)/2` on their halves.
    ///
    /// The raised cosine's `g` and `h` have corners at `0` and `½`, so their
    /// Fourier coefficients decay like `m⁻²` and `Σ|m||k̂(m)|` diverges.
    /// This triple's coefficients decay like `m⁻³`, which is what the
    /// perturbation bounds in [`crate::approx`] need. The quintic smoothstep
    /// decays faster but closes the gap at `N = 8`.
    pub fn smoothstep() -> Self {
        let s = |y: T| {
            let y = y.max(T::zero()).min(T::one());
            y * y * (T::lit(3.0) - T::lit(2.0) * y)
        };
        let half = T::lit(0.5);
        let fold = move |x: T| if x <= half { x } else { T::one() - x };
        let f = move |x: T| {
            let c = (T::FRAC_PI_2() * s(T::lit(2.0) * fold(x))).cos();
            c * c
        };
        let bump = move |x: T| (T::PI() * s(T::lit(2.0) * fold(x))).sin() * half;
        Self::from_fns(
            "smoothstep",
            f,
            move |x| if x < half { bump(x) } else { T::zero() },
            move |x| if x >= half { bump(x) } else { T::zero() },
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    #[inline]
    pub fn f(&self, x: T) -> T {
        (self.f)(wrap_unit(x))
    }

    #[inline]
    pub fn g(&self, x: T) -> T {
        (self.g)(wrap_unit(x))
    }

    #[inline]
    pub fn h(&self, x: T) -> T {
        (self.h)(wrap_unit(x))
    }

    /// `(f, g, h)` at the circle point `z`.
    pub fn eval_at(&self, z: Cx<T>) -> (T, T, T) {
        let x = circle_coord(z);
        (self.f(x), self.g(x), self.h(x))
    }

    /// Returns a copy with `f` replaced, keeping `g`, `h`. Intended for
    /// exercising validation failures.
    pub fn with_f(&self, f: impl Fn(T) -> T + Send + Sync + 'static) -> Self {
        let g = self.g.clone();
        let h = self.h.clone();
        Self::from_fns(format!("{}+custom-f", self.name), f, move |x| g(x), move |x| h(x))
    }
}

/// The triple used throughout unless another is supplied.
pub fn default_triple<T: Real>() -> SymbolTriple<T> {
    SymbolTriple::raised_cosine()
}

/// Grid check of the symbol identities.
#[derive(Clone, Debug, PartialEq)]
pub struct ValidationReport<T> {
    pub grid_size: usize,
    /// max |f² + g² + h² − f|
    pub identity_violation: T,
    /// max |g·h|
    pub product_violation: T,
    /// |f(0) − 1| + |g(0)| + |h(0)|
    pub anchor_violation: T,
    /// largest distance of any value from `[0, 1]`
    pub range_violation: T,
    pub tolerance: T,
    pub passed: bool,
}

impl<T: Real> ValidationReport<T> {
    pub fn max_violation(&self) -> T {
        self.identity_violation
            .max(self.product_violation)
            .max(self.anchor_violation)
            .max(self.range_violation)
    }
}

/// Pass threshold for [`validate_triple`]: `1e-10` in `f64`.
pub fn symbol_tolerance<T: Real>() -> T {
    T::lit(1e-10).max(T::epsilon() * T::lit(100.0))
}

pub fn validate_triple<T: Real>(t: &SymbolTriple<T>, grid_size: usize) -> Result<ValidationReport<T>> {
    if grid_size < 2 {
        return Err(Error::InvalidArgument(format!("grid size {grid_size} < 2")));
    }
    let mut identity = T::zero();
    let mut product = T::zero();
    let mut range = T::zero();
    let out_of_unit = |v: T| (-v).max(v - T::one()).max(T::zero());
    let step = T::one() / T::from_usize_lossy(grid_size);
    for i in 0..grid_size {
        let x = T::from_usize_lossy(i) * step;
        let (f, g, h) = (t.f(x), t.g(x), t.h(x));
        identity = identity.max((f * f + g * g + h * h - f).abs());
        product = product.max((g * h).abs());
        range = range.max(out_of_unit(f)).max(out_of_unit(g)).max(out_of_unit(h));
    }
    let zero = T::zero();
    let anchor = (t.f(zero) - T::one()).abs() + t.g(zero).abs() + t.h(zero).abs();
    let tolerance = symbol_tolerance();
    let passed = identity <= tolerance && product <= tolerance && anchor <= tolerance && range <= tolerance;
    Ok(ValidationReport {
        grid_size,
        identity_violation: identity,
        product_violation: product,
        anchor_violation: anchor,
        range_violation: range,
        tolerance,
        passed,
    })
}

/// Grid estimate of the Lipschitz constant of `k` with respect to the
/// circle coordinate, including the wrap-around step, times
/// [`LIPSCHITZ_SAFETY`].
pub fn lipschitz_bound<T: Real>(k: impl Fn(T) -> Cx<T>, grid_size: usize) -> T {
    let n = grid_size.max(2);
    let step = T::one() / T::from_usize_lossy(n);
    let first = k(T::zero());
    let mut prev = first;
    let mut best = T::zero();
    for i in 1..=n {
        let cur = if i == n { first } else { k(T::from_usize_lossy(i) * step) };
        best = best.max((cur - prev).norm() / step);
        prev = cur;
    }
    best * T::lit(LIPSCHITZ_SAFETY)
}
