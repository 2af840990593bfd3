//! Formal and semiclassical normal forms of integrable systems near a
//! nondegenerate critical point.
//!
//! Symbols are truncated series in `(x, xi, hbar)` ([`poly::PolySymbol`]).
//! The pipeline classifies the quadratic parts ([`symplectic`]), removes the
//! higher-order terms with Lie transforms ([`nf_classical`]) and then the
//! `hbar` corrections with Moyal conjugations ([`nf_semiclassical`]).

pub mod brackets;
pub mod homological;
pub mod linalg;
pub mod nf_classical;
pub mod nf_semiclassical;
pub mod poly;
pub mod qpoly;
pub mod rat;
pub mod report;
pub mod scalar;
pub mod symplectic;
pub mod systems;

pub use poly::{Cuts, Monomial, PolyError, PolySymbol};
pub use scalar::{CoeffKind, Complex64, GaussRational, Rational, Scalar};
