//! Polynomial support types shared by the balance, resonance and series
//! stages: sparse multivariate polynomials over [`QuadExt`] in indexed
//! unknowns, dense univariate polynomials, and univariate polynomials whose
//! coefficients still carry unknowns.

mod mpoly;
mod roots;
mod rpoly;

pub use mpoly::{MPoly, Mono};
pub use roots::{exact_roots, ExactRoots};
pub use rpoly::{RMPoly, RPoly};
