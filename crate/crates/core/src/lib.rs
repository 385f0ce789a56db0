//! Numerics for almost-commuting unitary matrices: the Loring element and
//! its integer index, the pairing of the `u_t` family with matrix-valued
//! loops, quantitative large-`N` checks for the clock and shift pair, and
//! certified lower bounds on the distance to commuting pairs.
//!
//! Everything is generic over the real scalar ([`Real`], implemented for
//! `f32` and `f64`). The aliases below fix `f64`.

pub mod approx;
pub mod asymptotics;
pub mod error;
pub mod loring;
pub mod matrix;
pub mod model;
pub mod pairing;
pub mod scalar;
pub mod symbols;

pub use error::{Error, Result};
pub use scalar::{Cx, Real};

pub type Matrix = matrix::SquareMatrix<f64>;
pub type Hermitian = matrix::HermitianMatrix<f64>;
pub type Unitary = matrix::UnitaryMatrix<f64>;
pub type Triple = symbols::SymbolTriple<f64>;
pub type Loring = loring::LoringElement<f64>;
pub type Index = loring::IndexResult<f64>;
pub type Loop = pairing::LoopUnitary<f64>;
pub type Projection = pairing::ProjectionMatrix<f64>;
pub type Record = asymptotics::SweepRecord<f64>;

/// Single-precision counterparts.
pub mod single {
    pub type Matrix = crate::matrix::SquareMatrix<f32>;
    pub type Hermitian = crate::matrix::HermitianMatrix<f32>;
    pub type Unitary = crate::matrix::UnitaryMatrix<f32>;
    pub type Triple = crate::symbols::SymbolTriple<f32>;
    pub type Index = crate::loring::IndexResult<f32>;
}
