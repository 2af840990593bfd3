use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::monomial::Monomial;
use super::symbol::{Cuts, PolySymbol};
use super::PolyError;
use crate::scalar::{CoeffKind, Rational, Scalar};

/// One term: `{"x":[..], "xi":[..], "h":k, "coeff":..}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermJson {
    pub x: Vec<u32>,
    pub xi: Vec<u32>,
    #[serde(default)]
    pub h: u32,
    pub coeff: Value,
}

/// A symbol with its header.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymbolJson {
    pub n: usize,
    pub deg_cut: u32,
    pub h_cut: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight_cut: Option<u32>,
    pub terms: Vec<TermJson>,
}

impl SymbolJson {
    pub fn cuts(&self) -> Cuts {
        cuts_from_header(self.deg_cut, self.h_cut, self.weight_cut)
    }
}

pub(crate) fn cuts_from_header(deg: u32, h: u32, weight: Option<u32>) -> Cuts {
    let mut c = Cuts::new(deg, h);
    if let Some(w) = weight {
        c.weight = c.weight.min(w);
    }
    c
}

impl<C: Scalar> PolySymbol<C> {
    pub fn terms_to_json(&self) -> Vec<TermJson> {
        self.terms()
            .map(|(m, c)| {
                let (x, xi) = m.split();
                TermJson {
                    x,
                    xi,
                    h: m.h(),
                    coeff: c.to_json(),
                }
            })
            .collect()
    }

    pub fn to_json(&self) -> SymbolJson {
        let c = self.cuts();
        SymbolJson {
            n: self.n(),
            deg_cut: c.deg,
            h_cut: c.h,
            weight_cut: c.is_graded().then_some(c.weight),
            terms: self.terms_to_json(),
        }
    }

    /// Builds a symbol from a term list. Terms outside the cuts are dropped,
    /// repeated monomials are summed.
    pub fn from_terms_json(n: usize, cuts: Cuts, terms: &[TermJson]) -> Result<Self, PolyError> {
        let mut out = Self::zero(n, cuts);
        for t in terms {
            if t.x.len() != n || t.xi.len() != n {
                return Err(PolyError::Malformed(format!(
                    "term exponent vectors must have length {n}"
                )));
            }
            let c = C::from_json(&t.coeff).map_err(|e| PolyError::Malformed(e.to_string()))?;
            out.add_term(Monomial::new(&t.x, &t.xi, t.h), c);
        }
        Ok(out)
    }

    pub fn from_json(s: &SymbolJson) -> Result<Self, PolyError> {
        Self::from_terms_json(s.n, s.cuts(), &s.terms)
    }
}

/// A symbol whose coefficient kind is read from the input.
#[derive(Clone, Debug, PartialEq)]
pub enum DynSymbol {
    Rational(PolySymbol<Rational>),
    Float(PolySymbol<f64>),
}

/// Kind implied by a coefficient literal. Integers fit either kind.
fn literal_kind(v: &Value) -> Result<Option<CoeffKind>, PolyError> {
    match v {
        Value::String(_) => Ok(Some(CoeffKind::Rational)),
        Value::Number(n) if n.is_i64() || n.is_u64() => Ok(None),
        Value::Number(_) => Ok(Some(CoeffKind::Float)),
        other => Err(PolyError::Malformed(format!(
            "unsupported coefficient {other}"
        ))),
    }
}

/// Common kind of a set of term lists; rational when nothing forces float.
pub fn infer_kind<'a>(
    terms: impl IntoIterator<Item = &'a TermJson>,
) -> Result<CoeffKind, PolyError> {
    let mut kind: Option<CoeffKind> = None;
    for t in terms {
        if let Some(k) = literal_kind(&t.coeff)? {
            match kind {
                None => kind = Some(k),
                Some(prev) if prev != k => return Err(PolyError::MixedKinds(prev, k)),
                _ => {}
            }
        }
    }
    Ok(kind.unwrap_or(CoeffKind::Rational))
}

impl DynSymbol {
    pub fn from_json(s: &SymbolJson) -> Result<Self, PolyError> {
        match infer_kind(&s.terms)? {
            CoeffKind::Float => Ok(DynSymbol::Float(PolySymbol::from_json(s)?)),
            _ => Ok(DynSymbol::Rational(PolySymbol::from_json(s)?)),
        }
    }

    pub fn kind(&self) -> CoeffKind {
        match self {
            DynSymbol::Rational(_) => CoeffKind::Rational,
            DynSymbol::Float(_) => CoeffKind::Float,
        }
    }

    pub fn to_json(&self) -> SymbolJson {
        match self {
            DynSymbol::Rational(p) => p.to_json(),
            DynSymbol::Float(p) => p.to_json(),
        }
    }

    pub fn as_float(&self) -> PolySymbol<f64> {
        match self {
            DynSymbol::Rational(p) => p.map_coeffs(f64::from_rational),
            DynSymbol::Float(p) => p.clone(),
        }
    }

    pub fn checked_add(&self, other: &DynSymbol) -> Result<DynSymbol, PolyError> {
        match (self, other) {
            (DynSymbol::Rational(a), DynSymbol::Rational(b)) => {
                Ok(DynSymbol::Rational(a.checked_add(b)?))
            }
            (DynSymbol::Float(a), DynSymbol::Float(b)) => Ok(DynSymbol::Float(a.checked_add(b)?)),
            (a, b) => Err(PolyError::MixedKinds(a.kind(), b.kind())),
        }
    }

    pub fn checked_mul(&self, other: &DynSymbol) -> Result<DynSymbol, PolyError> {
        match (self, other) {
            (DynSymbol::Rational(a), DynSymbol::Rational(b)) => {
                Ok(DynSymbol::Rational(a.checked_mul(b)?))
            }
            (DynSymbol::Float(a), DynSymbol::Float(b)) => Ok(DynSymbol::Float(a.checked_mul(b)?)),
            (a, b) => Err(PolyError::MixedKinds(a.kind(), b.kind())),
        }
    }
}
