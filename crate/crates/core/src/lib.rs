//! Exact-arithmetic Painleve analysis of polynomial ODE systems.
//!
//! The pipeline runs the three levels of the Painleve test on systems of
//! polynomial ODEs in jet variables and, where the recursion admits them,
//! constructs multi-parameter formal Laurent-series solutions:
//!
//! 1. [`balance`] enumerates dominant behaviors (leading exponents and
//!    coefficients near a movable singularity),
//! 2. [`resonance`] builds the resonance matrix, classifies the roots of its
//!    determinant and renders the integrability verdict,
//! 3. [`series`] runs the coefficient recursion through the resonances,
//!    registering free parameters and branching on compatibility constraints.
//!
//! All series arithmetic is exact over Q or a single quadratic extension
//! Q(sqrt(q)) ([`exactnum`]); a configurable-precision decimal float backs the
//! numeric fallbacks and the closed-form oracles in [`verify`].

pub mod balance;
pub mod exactnum;
pub mod odemodel;
pub mod poly;
pub mod report;
pub mod resonance;
pub mod series;
pub mod verify;

pub use exactnum::{BigFloat, BigRational, NumberError, QuadExt};
pub use odemodel::{JetVar, ParseError, PolyODESystem};
// pub use report::AnalysisReport;
// pub use resonance::{PainleveVerdict, VerdictStatus};
// pub use series::LaurentSolution;
