//! Exact numbers: arbitrary-precision rationals, a single quadratic extension
//! Q(sqrt(q)), and a configurable-precision decimal float.
//!
//! `BigRational` is re-exported from `num-rational`; its canonical form
//! (reduced, positive denominator) and `a/b` string syntax match what the
//! rest of the crate expects. [`QuadExt`] layers one square root over it and
//! [`BigFloat`] provides the numeric fallback.

mod bigfloat;
pub(crate) mod factor;
mod quadext;

pub use bigfloat::{BigFloat, DEFAULT_PRECISION};
pub use factor::{factorize, squarefree_core};
pub use quadext::QuadExt;

pub use num_bigint::BigInt;
pub use num_rational::BigRational;

use thiserror::Error;

/// Errors from exact-number construction and arithmetic.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NumberError {
    #[error("division by zero")]
    DivisionByZero,
    /// Two values live in different quadratic extensions; combining them would
    /// need a field tower of height >= 2, which exact mode does not support.
    #[error("incompatible radicands {0} and {1}: field tower not supported")]
    IncompatibleRadicands(BigInt, BigInt),
    /// A value with a negative radicand has no real decimal expansion.
    #[error("cannot convert complex value (radicand {0} < 0) to a real float")]
    ComplexValue(BigInt),
    #[error("invalid number syntax: {0}")]
    Syntax(String),
}
