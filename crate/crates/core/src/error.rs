use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
///
/// Floating-point payloads are carried as `f64` regardless of the scalar
/// type the computation ran in.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("matrix is not Hermitian: defect {defect:e} exceeds {tol:e}")]
    NotHermitian { defect: f64, tol: f64 },

    #[error("matrix is not unitary: defect {defect:e} exceeds {tol:e}")]
    NotUnitary { defect: f64, tol: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("spectral gap at 1/2 is {gap:e}, not above the required {gap_min:e}")]
    GapClosed { gap: f64, gap_min: f64 },

    #[error("index trace {raw} is not within {slack} of an integer")]
    NonIntegerIndex { raw: f64, slack: f64 },

    #[error("model inconsistency: entrywise error {max_err:e} exceeds {tol:e}")]
    ModelInconsistency { max_err: f64, tol: f64 },

    #[error("not a projection: ‖p²−p‖ = {idempotent:e}, ‖p−p*‖ = {selfadjoint:e}")]
    NotAProjection { idempotent: f64, selfadjoint: f64 },

    #[error("window error: {0}")]
    Window(String),

    #[error("index changed with window size: {first} vs {second}")]
    Stability { first: i64, second: i64 },

    #[error("sampling error: {0}")]
    Sample(String),

    #[error("loop is not unitary: pointwise defect {defect:e}")]
    NonUnitaryLoop { defect: f64 },

    #[error("loop value at z = 1 is not the identity: defect {defect:e}")]
    LoopNotBased { defect: f64 },

    #[error("symbol Fourier coefficients decay too slowly (exponent {exponent:.3}) for a certified bound")]
    NonSummableSymbol { exponent: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
