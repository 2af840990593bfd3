//! Truncated series in `x_1..x_n, xi_1..xi_n, hbar`.

mod json;
mod monomial;
mod symbol;

pub(crate) use json::cuts_from_header;
pub use json::{infer_kind, DynSymbol, SymbolJson, TermJson};
pub use monomial::{exponent_vectors, phase_basis, Monomial};
pub(crate) use symbol::Accumulator;
pub use symbol::{Cuts, GradedComponent, PolySymbol};

use crate::scalar::CoeffKind;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PolyError {
    #[error("dimension mismatch: {left} vs {right} degrees of freedom")]
    DimensionMismatch { left: usize, right: usize },
    #[error("mixed coefficient kinds: {0:?} and {1:?}")]
    MixedKinds(CoeffKind, CoeffKind),
    #[error("size mismatch: expected {expected}, got {got}")]
    SizeMismatch { expected: usize, got: usize },
    #[error("component (degree {k}, hbar^{h}) outside cuts (deg {deg_cut}, h {h_cut})")]
    OutOfRange {
        k: u32,
        h: u32,
        deg_cut: u32,
        h_cut: u32,
    },
    #[error("malformed symbol: {0}")]
    Malformed(String),
}
