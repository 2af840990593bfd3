//! JSON input systems and self-describing reports.
//!
//! Reports carry the library version, the bracket convention and every cut,
//! and contain enough to replay the certificate without the normal form
//! code: [`verify_report`] rebuilds the residuals from the term lists alone.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::brackets::CONVENTION;
use crate::linalg::Mat;
use crate::nf_classical::{
    verify_classical, CertificateReport, ClassicalNF, IntegrableSystem, NfError,
};
use crate::nf_semiclassical::{verify_semiclassical, SemiclassicalNF};
use crate::poly::{cuts_from_header, infer_kind, Cuts, PolyError, PolySymbol, TermJson};
use crate::qpoly::{QPoly, QTermJson};
use crate::scalar::{CoeffKind, RealScalar, Scalar};
use crate::symplectic::{CartanReport, CartanType};
use crate::systems::NeumannChart;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("malformed input: {0}")]
    Malformed(String),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Nf(#[from] NfError),
}

fn malformed(e: impl ToString) -> ReportError {
    ReportError::Malformed(e.to_string())
}

/// `{n, deg_cut, h_cut, weight_cut?, mode?, symbols: [[term..]..]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemJson {
    pub n: usize,
    pub deg_cut: u32,
    #[serde(default)]
    pub h_cut: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight_cut: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<CoeffKind>,
    pub symbols: Vec<Vec<TermJson>>,
}

impl SystemJson {
    pub fn cuts(&self) -> Cuts {
        cuts_from_header(self.deg_cut, self.h_cut, self.weight_cut)
    }

    /// Declared mode, else inferred from the literals (rational unless a
    /// float literal appears).
    pub fn kind(&self) -> Result<CoeffKind, ReportError> {
        match self.mode {
            Some(k) => Ok(k),
            None => Ok(infer_kind(self.symbols.iter().flatten())?),
        }
    }

    pub fn system<R: Scalar>(&self) -> Result<IntegrableSystem<R>, ReportError> {
        if self.symbols.len() != self.n {
            return Err(malformed(format!(
                "expected {} symbols, got {}",
                self.n,
                self.symbols.len()
            )));
        }
        let cuts = self.cuts();
        let symbols = self
            .symbols
            .iter()
            .map(|t| PolySymbol::from_terms_json(self.n, cuts, t))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(IntegrableSystem::new(symbols)?)
    }

    pub fn from_system<R: Scalar>(sys: &IntegrableSystem<R>) -> Self {
        let c = sys.cuts();
        SystemJson {
            n: sys.n,
            deg_cut: c.deg,
            h_cut: c.h,
            weight_cut: c.is_graded().then_some(c.weight),
            mode: Some(R::KIND),
            symbols: sys.symbols.iter().map(PolySymbol::terms_to_json).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Header {
    /// `classify`, `classical`, `semiclassical` or `neumann`.
    pub report: String,
    pub version: String,
    pub convention: String,
    pub mode: CoeffKind,
    pub n: usize,
    pub deg_cut: u32,
    pub h_cut: u32,
    pub weight_cut: u32,
}

impl Header {
    pub fn new(report: &str, mode: CoeffKind, n: usize, cuts: Cuts) -> Self {
        Header {
            report: report.to_string(),
            version: VERSION.to_string(),
            convention: CONVENTION.to_string(),
            mode,
            n,
            deg_cut: cuts.deg,
            h_cut: cuts.h,
            weight_cut: cuts.weight,
        }
    }

    pub fn cuts(&self) -> Cuts {
        cuts_from_header(self.deg_cut, self.h_cut, Some(self.weight_cut))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifyReport {
    pub header: Header,
    pub cartan_type: CartanType,
    pub s: Value,
    pub c: Value,
    pub frame_residual: f64,
    pub cartan: CartanReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassicalReport {
    pub header: Header,
    pub cartan_type: CartanType,
    pub s: Value,
    pub c: Value,
    /// `f_i(0)`, removed before normalizing.
    pub constants: Vec<Value>,
    pub lambda: Vec<i64>,
    pub q: Vec<Vec<TermJson>>,
    pub generators: Vec<Vec<TermJson>>,
    /// `F_i` as polynomials in `q`.
    pub f: Vec<Vec<QTermJson>>,
    /// `M` as polynomials in `q`, row-major.
    pub m: Vec<Vec<Vec<QTermJson>>>,
    pub certificate: CertificateReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SemiclassicalReport {
    pub header: Header,
    pub classical: ClassicalReport,
    /// `alpha[l-1][k]`: coefficient of `hbar^l` in `alpha_k`.
    pub alpha: Vec<Vec<Value>>,
    /// `M(hbar)` entries as symbol term lists, row-major.
    pub mh: Vec<Vec<Vec<TermJson>>>,
    /// The same entries as polynomials in `(q, hbar)`.
    pub mh_q: Vec<Vec<Vec<QTermJson>>>,
    /// `hbar^l s_l`, applied by Moyal Lie transforms after the generators.
    pub conjugators: Vec<Vec<TermJson>>,
    pub unitary_gauge: bool,
    pub certificate: CertificateReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NeumannReport {
    pub header: Header,
    /// Sorted eigenvalues of `A`.
    pub eigenvalues: Vec<f64>,
    pub fixed_point: usize,
    pub cartan_type: CartanType,
    pub expected: CartanType,
    pub matches: bool,
    pub frame_residual: f64,
    /// Heuristic only: no finite check certifies irrational independence.
    pub nonresonant: bool,
    pub hamiltonian: Vec<TermJson>,
}

pub fn neumann_report(chart: &NeumannChart) -> NeumannReport {
    NeumannReport {
        header: Header::new(
            "neumann",
            CoeffKind::Float,
            chart.system.n,
            chart.hamiltonian.cuts(),
        ),
        eigenvalues: chart.eigenvalues.clone(),
        fixed_point: chart.chart_center,
        cartan_type: chart.cartan_type.clone(),
        expected: chart.expected.clone(),
        matches: chart.cartan_type == chart.expected,
        frame_residual: chart.frame_residual,
        nonresonant: chart.nonresonant,
        hamiltonian: chart.hamiltonian.terms_to_json(),
    }
}

fn qmat_json<R: Scalar>(m: &[Vec<QPoly<R>>]) -> Vec<Vec<Vec<QTermJson>>> {
    m.iter()
        .map(|row| row.iter().map(QPoly::to_json).collect())
        .collect()
}

pub fn classical_report<R: RealScalar>(nf: &ClassicalNF<R>) -> ClassicalReport {
    ClassicalReport {
        header: Header::new("classical", R::KIND, nf.q.len(), Cuts::new(nf.deg, 0)),
        cartan_type: nf.cartan.cartan_type.clone(),
        s: nf.cartan.s.to_json(),
        c: nf.cartan.c.to_json(),
        constants: nf.constants.iter().map(Scalar::to_json).collect(),
        lambda: nf.lambda.clone(),
        q: nf.q.iter().map(PolySymbol::terms_to_json).collect(),
        generators: nf
            .generators
            .iter()
            .map(PolySymbol::terms_to_json)
            .collect(),
        f: nf.f.iter().map(QPoly::to_json).collect(),
        m: qmat_json(&nf.m),
        certificate: nf.certificate.clone(),
    }
}

pub fn semiclassical_report<R: RealScalar>(nf: &SemiclassicalNF<R>) -> SemiclassicalReport {
    let n = nf.base.q.len();
    SemiclassicalReport {
        header: Header::new("semiclassical", R::KIND, n, nf.cuts),
        classical: classical_report(&nf.base),
        alpha: nf
            .alpha
            .iter()
            .map(|l| l.iter().map(Scalar::to_json).collect())
            .collect(),
        mh: nf
            .mh_symbols()
            .iter()
            .map(|row| row.iter().map(PolySymbol::terms_to_json).collect())
            .collect(),
        mh_q: qmat_json(&nf.mh),
        conjugators: nf
            .conjugators
            .iter()
            .map(PolySymbol::terms_to_json)
            .collect(),
        unitary_gauge: nf.unitary_gauge,
        certificate: nf.certificate.clone(),
    }
}

fn symbols<R: Scalar>(
    n: usize,
    cuts: Cuts,
    lists: &[Vec<TermJson>],
) -> Result<Vec<PolySymbol<R>>, ReportError> {
    Ok(lists
        .iter()
        .map(|t| PolySymbol::from_terms_json(n, cuts, t))
        .collect::<Result<_, _>>()?)
}

fn scalars<R: Scalar>(v: &[Value]) -> Result<Vec<R>, ReportError> {
    v.iter()
        .map(|x| R::from_json(x).map_err(malformed))
        .collect()
}

/// `sum_gamma c hbar^h q^gamma` by plain symbol products.
fn expand_q_terms<R: Scalar>(
    terms: &[QTermJson],
    q: &[PolySymbol<R>],
    n: usize,
    cuts: Cuts,
) -> Result<PolySymbol<R>, ReportError> {
    let mut out = PolySymbol::zero(n, cuts);
    for t in terms {
        if t.q.len() != q.len() {
            return Err(malformed("q exponent vector of the wrong length"));
        }
        let mut p = PolySymbol::constant(n, cuts, R::from_json(&t.coeff).map_err(malformed)?);
        for (qj, &e) in q.iter().zip(&t.q) {
            p = &p * &qj.with_cuts(cuts).pow(e);
        }
        out = &out + &p.times_h(t.h);
    }
    Ok(out)
}

fn verify_classical_part<R: RealScalar>(
    sys: &IntegrableSystem<R>,
    r: &ClassicalReport,
) -> Result<CertificateReport, ReportError> {
    let n = sys.n;
    let cuts = Cuts::new(r.header.deg_cut, 0);
    let s = Mat::<R>::from_json(&r.s).map_err(malformed)?;
    let q = symbols::<R>(n, cuts, &r.q)?;
    let generators = symbols::<R>(n, cuts, &r.generators)?;
    let m =
        r.m.iter()
            .map(|row| row.iter().map(|e| expand_q_terms(e, &q, n, cuts)).collect())
            .collect::<Result<Vec<Vec<_>>, _>>()?;
    Ok(verify_classical(
        sys,
        r.header.deg_cut,
        &s,
        &q,
        &generators,
        &m,
    )?)
}

/// Replays a classical or semiclassical report against its input system.
/// The residual and certificate fields of the report are ignored.
pub fn verify_report<R: RealScalar>(
    sys: &IntegrableSystem<R>,
    report: &Value,
) -> Result<CertificateReport, ReportError> {
    let kind = report
        .pointer("/header/report")
        .and_then(Value::as_str)
        .ok_or_else(|| malformed("missing header.report"))?;
    match kind {
        "classical" => {
            let r: ClassicalReport = serde_json::from_value(report.clone()).map_err(malformed)?;
            verify_classical_part(sys, &r)
        }
        "semiclassical" => {
            let r: SemiclassicalReport =
                serde_json::from_value(report.clone()).map_err(malformed)?;
            let n = sys.n;
            let cuts = r.header.cuts();
            let c = &r.classical;
            let s = Mat::<R>::from_json(&c.s).map_err(malformed)?;
            let q = symbols::<R>(n, cuts, &c.q)?;
            let generators = symbols::<R>(n, cuts, &c.generators)?;
            let conjugators = symbols::<R>(n, cuts, &r.conjugators)?;
            let mh =
                r.mh.iter()
                    .map(|row| symbols::<R>(n, cuts, row))
                    .collect::<Result<Vec<_>, _>>()?;
            let alpha = r
                .alpha
                .iter()
                .map(|l| scalars::<R>(l))
                .collect::<Result<Vec<_>, _>>()?;
            if mh.len() != n
                || mh.iter().any(|row| row.len() != n)
                || alpha.iter().any(|l| l.len() != n)
            {
                return Err(malformed("M(hbar) or alpha has the wrong shape"));
            }
            Ok(verify_semiclassical(
                sys,
                cuts,
                &s,
                &q,
                &generators,
                &conjugators,
                &mh,
                &alpha,
            )?)
        }
        other => Err(malformed(format!("cannot verify a `{other}` report"))),
    }
}
