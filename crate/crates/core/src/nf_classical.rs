//! Formal Birkhoff normal form for a commuting family with nondegenerate
//! quadratic parts.
//!
//! Steps: Williamson frame `S` and recombination `C`, then for every degree
//! `k = 3..N` one homological solve and one Lie transform, then Taylor
//! division of the resulting `F_i(q)` into `M(q)`.

use serde::{Deserialize, Serialize};

use crate::brackets::{lie_transform, moyal_bracket, poisson, BracketError};
use crate::homological::{
    check_compatibility, check_compatibility_at, HomologicalError, HomologicalSolver,
};
use crate::linalg::Mat;
use crate::poly::{Cuts, Monomial, PolyError, PolySymbol};
use crate::qpoly::{qmat_at_zero, taylor_division, QMat, QPoly, QPolyError};
use crate::scalar::{RealScalar, Scalar};
use crate::symplectic::{
    standard_basis, williamson_classify, CartanBasis, FrameField, QuadraticForm, SymplecticError,
    WilliamsonOptions,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NfError {
    #[error("symbol {index} has a nonzero linear part: the base point is not critical")]
    NotCritical { index: usize },
    #[error("expected {expected} symbols in {expected} degrees of freedom, got {got}")]
    SizeMismatch { expected: usize, got: usize },
    #[error("symbols {i} and {j} do not commute (first defect at degree {degree}, hbar^{h})")]
    CommutationViolated {
        i: usize,
        j: usize,
        degree: u32,
        h: u32,
    },
    #[error("level {level} left a term at degree {degree}, hbar^{h}")]
    LevelNotCleared { level: u32, degree: u32, h: u32 },
    #[error("M(0) is singular")]
    SingularM0,
    #[error(transparent)]
    Symplectic(#[from] SymplecticError),
    #[error(transparent)]
    Homological(#[from] HomologicalError),
    #[error(transparent)]
    Bracket(#[from] BracketError),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    QPoly(#[from] QPolyError),
}

/// `n` symbols in `n` degrees of freedom, centred at the origin.
#[derive(Clone, Debug)]
pub struct IntegrableSystem<C> {
    pub n: usize,
    pub symbols: Vec<PolySymbol<C>>,
}

/// Lowest `(degree, h)` with a non-negligible coefficient, ordered by `h`
/// first.
pub(crate) fn first_defect<C: Scalar>(p: &PolySymbol<C>, scale: f64) -> Option<(u32, u32)> {
    p.terms()
        .filter(|(_, c)| !c.negligible(scale))
        .map(|(m, _)| (m.h(), m.degree()))
        .min()
        .map(|(h, d)| (d, h))
}

impl<C: Scalar> IntegrableSystem<C> {
    pub fn new(symbols: Vec<PolySymbol<C>>) -> Result<Self, NfError> {
        let n = symbols.first().map_or(0, PolySymbol::n);
        if symbols.len() != n || symbols.iter().any(|s| s.n() != n) {
            return Err(NfError::SizeMismatch {
                expected: n,
                got: symbols.len(),
            });
        }
        Ok(IntegrableSystem { n, symbols })
    }

    /// Common cuts of the symbols.
    pub fn cuts(&self) -> Cuts {
        self.symbols
            .iter()
            .fold(self.symbols[0].cuts(), |c, s| c.min(&s.cuts()))
    }

    pub fn is_semiclassical(&self) -> bool {
        self.cuts().h > 0
    }

    /// Pairwise brackets vanish up to the cuts: Poisson when `h_cut = 0`,
    /// Moyal otherwise.
    pub fn check_commutation(&self) -> Result<(), NfError> {
        let quantum = self.is_semiclassical();
        let scale = self
            .symbols
            .iter()
            .map(PolySymbol::scale)
            .fold(0.0, f64::max);
        for i in 0..self.n {
            for j in i + 1..self.n {
                let b = if quantum {
                    moyal_bracket(&self.symbols[i], &self.symbols[j])?
                } else {
                    poisson(&self.symbols[i], &self.symbols[j])?
                };
                if let Some((degree, h)) = first_defect(&b, scale * scale) {
                    return Err(NfError::CommutationViolated { i, j, degree, h });
                }
            }
        }
        Ok(())
    }

    /// Removes constant terms (returned) and rejects linear terms.
    pub fn centred(&self) -> Result<(Self, Vec<C>), NfError> {
        let mut out = Vec::with_capacity(self.n);
        let mut constants = Vec::with_capacity(self.n);
        for (index, s) in self.symbols.iter().enumerate() {
            let scale = s.scale();
            if s.terms()
                .any(|(m, c)| m.h() == 0 && m.degree() == 1 && !c.negligible(scale))
            {
                return Err(NfError::NotCritical { index });
            }
            let one = Monomial::one(self.n);
            constants.push(s.coeff(&one));
            out.push(s.filter(|m| *m != one));
        }
        Ok((
            IntegrableSystem {
                n: self.n,
                symbols: out,
            },
            constants,
        ))
    }
}

/// Outcome of an independent replay.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub ok: bool,
    /// Degree cut the identities were checked to.
    pub deg: u32,
    /// hbar cut the identities were checked to.
    pub h: u32,
    /// First failing `(degree, hbar order)`, lowest first.
    pub first_failure: Option<(u32, u32)>,
    /// What failed there.
    pub reason: Option<String>,
}

impl CertificateReport {
    pub fn success(deg: u32, h: u32) -> Self {
        CertificateReport {
            ok: true,
            deg,
            h,
            first_failure: None,
            reason: None,
        }
    }

    pub fn failure(deg: u32, h: u32, at: (u32, u32), reason: impl Into<String>) -> Self {
        CertificateReport {
            ok: false,
            deg,
            h,
            first_failure: Some(at),
            reason: Some(reason.into()),
        }
    }

    /// Keeps the lower of two failures (by `hbar` order, then degree).
    pub fn merge(self, other: Self) -> Self {
        match (&self.first_failure, &other.first_failure) {
            (None, _) => other,
            (Some(_), None) => self,
            (Some(a), Some(b)) => {
                if (b.1, b.0) < (a.1, a.0) {
                    other
                } else {
                    self
                }
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct ClassicalNF<R> {
    pub cartan: CartanBasis<R>,
    /// Constants removed at ingestion.
    pub constants: Vec<R>,
    /// Standard basis `q_1..q_n` as symbols.
    pub q: Vec<PolySymbol<R>>,
    /// Nonzero homogeneous generators, applied in order.
    pub generators: Vec<PolySymbol<R>>,
    /// `F_i` with `f_i o phi = F_i(q)`.
    pub f: Vec<QPoly<R>>,
    /// `F = M q`, `M(0) = C`.
    pub m: QMat<R>,
    pub lambda: Vec<i64>,
    pub deg: u32,
    pub certificate: CertificateReport,
}

impl<R: Scalar> ClassicalNF<R> {
    /// Entries of `M` expanded as symbols in the phase variables.
    pub fn m_symbols(&self) -> Vec<Vec<PolySymbol<R>>> {
        let cuts = Cuts::new(self.deg, 0);
        let q: Vec<PolySymbol<R>> = self.q.iter().map(|qi| qi.with_cuts(cuts)).collect();
        self.m
            .iter()
            .map(|row| row.iter().map(|e| e.with_cuts(cuts).expand(&q)).collect())
            .collect()
    }
}

/// `f o S`, then the generators in order.
pub fn replay_classical<R: RealScalar>(
    symbols: &[PolySymbol<R>],
    s: &Mat<R>,
    generators: &[PolySymbol<R>],
    deg: u32,
) -> Result<Vec<PolySymbol<R>>, NfError> {
    let mut out = Vec::with_capacity(symbols.len());
    for f in symbols {
        let mut g = f
            .h_coeff(0)
            .with_cuts(Cuts::new(deg, 0))
            .substitute_linear(s)?;
        for a in generators {
            g = lie_transform(&g, a, deg)?;
        }
        out.push(g);
    }
    Ok(out)
}

fn first_commutation_defect<R: Scalar>(
    f: &[PolySymbol<R>],
    q: &[PolySymbol<R>],
    input_scale: f64,
) -> Result<Option<(u32, u32)>, PolyError> {
    // a bracket with a quadratic multiplies coefficients by up to the degree
    let deg = f
        .iter()
        .filter_map(PolySymbol::max_degree)
        .max()
        .unwrap_or(0)
        .max(1) as f64;
    let qscale = q.iter().map(PolySymbol::scale).fold(0.0, f64::max);
    let scale = f.iter().map(PolySymbol::scale).fold(input_scale, f64::max) * qscale * deg;
    let mut worst: Option<(u32, u32)> = None;
    for fi in f {
        for qj in q {
            if let Some(d) = first_defect(&poisson(fi, &qj.with_cuts(fi.cuts()))?, scale) {
                worst = Some(worst.map_or(d, |w| if (d.1, d.0) < (w.1, w.0) { d } else { w }));
            }
        }
    }
    Ok(worst)
}

#[derive(Clone, Copy, Debug, Default)]
pub struct NfOptions {
    pub williamson: WilliamsonOptions,
    /// Base of the `lambda` weights; `None` means `N + 1`.
    pub lambda_base: Option<i64>,
}

/// Computes the normal form up to degree `deg`.
pub fn classical_normal_form<R: FrameField>(
    sys: &IntegrableSystem<R>,
    deg: u32,
    opts: NfOptions,
) -> Result<ClassicalNF<R>, NfError> {
    let n = sys.n;
    let deg = deg.min(sys.cuts().deg).max(2);
    let cuts = Cuts::new(deg, 0);
    let classical = IntegrableSystem {
        n,
        symbols: sys
            .symbols
            .iter()
            .map(|s| s.h_coeff(0).with_cuts(cuts))
            .collect(),
    };
    let (centred, constants) = classical.centred()?;
    centred.check_commutation()?;

    let forms: Vec<QuadraticForm<R>> = centred
        .symbols
        .iter()
        .map(QuadraticForm::from_symbol)
        .collect();
    let cartan = williamson_classify(&forms, opts.williamson)?;
    let c_inv = cartan.c.inverse().ok_or(NfError::SingularM0)?;
    let q = standard_basis::<R>(&cartan.cartan_type, cuts);

    let mut f: Vec<PolySymbol<R>> = centred
        .symbols
        .iter()
        .map(|s| s.substitute_linear(&cartan.s))
        .collect::<Result<_, _>>()?;
    // float noise is judged against the whole system, not one graded part
    let scale = f.iter().map(PolySymbol::scale).fold(0.0, f64::max);
    let mut solver =
        HomologicalSolver::with_base(&q, deg, opts.lambda_base.unwrap_or(deg as i64 + 1))
            .with_noise_scale(scale);
    let mut generators = Vec::new();
    for k in 3..=deg {
        // recombine so the quadratic parts are exactly q
        let r: Vec<PolySymbol<R>> = (0..n)
            .map(|i| {
                let mut acc = PolySymbol::zero(n, cuts);
                for (j, fj) in f.iter().enumerate() {
                    acc = &acc + &fj.degree_part(k).scale_by(&c_inv[(i, j)]);
                }
                acc
            })
            .collect();
        let rhs: Vec<PolySymbol<R>> = r.iter().map(|p| (-p).chop(scale)).collect();
        if !check_compatibility_at(&rhs, &q, scale) {
            let (i, j) = incompatible_pair(&rhs, &q)?;
            return Err(NfError::CommutationViolated {
                i,
                j,
                degree: k,
                h: 0,
            });
        }
        let sol = solver.solve(&rhs)?;
        if sol.f.is_negligible(scale) {
            continue;
        }
        f = f
            .iter()
            .map(|fi| lie_transform(fi, &sol.f, deg).map(|g| g.chop(scale)))
            .collect::<Result<_, _>>()?;
        generators.push(sol.f);
    }

    let big_f: Vec<QPoly<R>> = f
        .iter()
        .map(|fi| QPoly::from_symbol_at(fi, &q, scale))
        .collect::<Result<_, _>>()?;
    let m: QMat<R> = big_f.iter().map(|fi| taylor_division(fi).1).collect();
    let m0 = qmat_at_zero(&m);
    if m0.inverse().is_none() {
        return Err(NfError::SingularM0);
    }
    let mut nf = ClassicalNF {
        cartan,
        constants,
        q,
        generators,
        f: big_f,
        m,
        lambda: solver.lambda().to_vec(),
        deg,
        certificate: CertificateReport::success(deg, 0),
    };
    nf.certificate = verify_classical_nf(&nf, sys)?;
    Ok(nf)
}

fn incompatible_pair<R: Scalar>(
    g: &[PolySymbol<R>],
    q: &[PolySymbol<R>],
) -> Result<(usize, usize), PolyError> {
    for i in 0..g.len() {
        for j in i + 1..g.len() {
            if !check_compatibility(&[g[i].clone(), g[j].clone()], &[q[i].clone(), q[j].clone()]) {
                return Ok((i, j));
            }
        }
    }
    Ok((0, 0))
}

/// Replays `S` and the generators on the original symbols and checks
/// `{f_i o phi, q_j} = 0` and `f_i o phi = sum_j M_ij q_j` up to `deg`.
/// `m` holds the entries of `M` already expanded as symbols. Only symbol
/// arithmetic and brackets are used.
pub fn verify_classical<R: RealScalar>(
    sys: &IntegrableSystem<R>,
    deg: u32,
    s: &Mat<R>,
    q: &[PolySymbol<R>],
    generators: &[PolySymbol<R>],
    m: &[Vec<PolySymbol<R>>],
) -> Result<CertificateReport, NfError> {
    let cuts = Cuts::new(deg, 0);
    let q: Vec<PolySymbol<R>> = q.iter().map(|qi| qi.with_cuts(cuts)).collect();
    let (centred, _) = IntegrableSystem {
        n: sys.n,
        symbols: sys
            .symbols
            .iter()
            .map(|s| s.h_coeff(0).with_cuts(cuts))
            .collect(),
    }
    .centred()?;
    let f = replay_classical(&centred.symbols, s, generators, deg)?;
    // float cancellation noise scales with the input before normalization
    let mut input_scale = 0.0f64;
    for c in &centred.symbols {
        input_scale = input_scale.max(c.substitute_linear(s)?.scale());
    }
    let mut report = CertificateReport::success(deg, 0);
    if let Some(at) = first_commutation_defect(&f, &q, input_scale)? {
        report = report.merge(CertificateReport::failure(deg, 0, at, "commutation with q"));
    }
    if m.len() != f.len() || m.iter().any(|row| row.len() != q.len()) {
        return Err(NfError::SizeMismatch {
            expected: f.len(),
            got: m.len(),
        });
    }
    for (fi, row) in f.iter().zip(m) {
        let mut expected = PolySymbol::zero(sys.n, cuts);
        for (mij, qj) in row.iter().zip(&q) {
            expected = &expected + &(&mij.with_cuts(cuts) * qj);
        }
        let diff = fi - &expected;
        if let Some(at) = first_defect(&diff, fi.scale().max(input_scale)) {
            report = report.merge(CertificateReport::failure(deg, 0, at, "f o phi != M q"));
        }
    }
    Ok(report)
}

pub fn verify_classical_nf<R: RealScalar>(
    nf: &ClassicalNF<R>,
    sys: &IntegrableSystem<R>,
) -> Result<CertificateReport, NfError> {
    verify_classical(
        sys,
        nf.deg,
        &nf.cartan.s,
        &nf.q,
        &nf.generators,
        &nf.m_symbols(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;
    use crate::symplectic::CartanType;

    type P = PolySymbol<Rational>;

    fn r(v: i64) -> Rational {
        Rational::from_i64(v)
    }

    fn sys(symbols: Vec<P>) -> IntegrableSystem<Rational> {
        IntegrableSystem::new(symbols).unwrap()
    }

    #[test]
    fn cubic_is_removed() {
        let c = Cuts::new(6, 0);
        let x = P::x(1, c, 0);
        let xi = P::xi(1, c, 0);
        let f = &(&x * &xi) + &x.pow(3);
        let nf = classical_normal_form(&sys(vec![f]), 6, NfOptions::default()).unwrap();
        assert!(nf.certificate.ok, "{:?}", nf.certificate);
        assert_eq!(nf.cartan.cartan_type, CartanType::new(0, 1, 0));
        // x^3 has no x xi component, and the higher corrections it spawns
        // at degree 4 are x^4-like, again off the kernel
        let q1 = QPoly::var(1, nf.f[0].cuts(), 0);
        let c0 = nf.cartan.c[(0, 0)].clone();
        assert_eq!(nf.f[0], q1.scale(&c0));
        assert!(!nf.generators.is_empty());
    }

    #[test]
    fn kernel_quartic_is_kept() {
        let c = Cuts::new(6, 0);
        let q = &P::x(1, c, 0) * &P::xi(1, c, 0);
        let f = &q + &q.pow(2);
        let nf = classical_normal_form(&sys(vec![f]), 6, NfOptions::default()).unwrap();
        assert!(nf.generators.is_empty());
        assert!(nf.certificate.ok);
        // S may rescale q by C; F(q) = C q + (C q)^2 in the new variable
        let c0 = nf.cartan.c[(0, 0)].clone();
        let qq = QPoly::var(1, nf.f[0].cuts(), 0).scale(&c0);
        assert_eq!(nf.f[0], qq.add(&qq.mul(&qq)));
        assert_eq!(nf.m[0][0].constant_term(), c0);
    }

    #[test]
    fn linear_terms_are_rejected() {
        let c = Cuts::new(4, 0);
        let f = &(&P::x(1, c, 0) * &P::xi(1, c, 0)) + &P::x(1, c, 0);
        assert_eq!(
            classical_normal_form(&sys(vec![f]), 4, NfOptions::default()).unwrap_err(),
            NfError::NotCritical { index: 0 }
        );
    }

    #[test]
    fn constants_are_recorded() {
        let c = Cuts::new(4, 0);
        let f = &(&P::x(1, c, 0) * &P::xi(1, c, 0)) + &P::constant(1, c, r(5));
        let nf = classical_normal_form(&sys(vec![f]), 4, NfOptions::default()).unwrap();
        assert_eq!(nf.constants, vec![r(5)]);
        assert!(nf.certificate.ok);
    }

    #[test]
    fn non_commuting_pair_is_rejected() {
        let c = Cuts::new(4, 0);
        let n = 2;
        let q1 = &P::x(n, c, 0) * &P::xi(n, c, 0);
        let q2 = &(&P::x(n, c, 1) * &P::xi(n, c, 1)) + &P::x(n, c, 0).pow(3);
        let err = classical_normal_form(&sys(vec![q1, q2]), 4, NfOptions::default()).unwrap_err();
        assert_eq!(
            err,
            NfError::CommutationViolated {
                i: 0,
                j: 1,
                degree: 3,
                h: 0
            }
        );
    }

    #[test]
    fn corrupted_generator_is_localized() {
        let c = Cuts::new(6, 0);
        let x = P::x(1, c, 0);
        let xi = P::xi(1, c, 0);
        let s = sys(vec![&(&x * &xi) + &(&x.pow(2) * &xi)]);
        let mut nf = classical_normal_form(&s, 6, NfOptions::default()).unwrap();
        assert!(verify_classical_nf(&nf, &s).unwrap().ok);
        let g = &nf.generators[0];
        let (m, c0) = g
            .terms()
            .next()
            .map(|(m, c)| (m.clone(), c.clone()))
            .unwrap();
        let mut bad = g.clone();
        bad.add_term(m, c0 / r(3));
        nf.generators[0] = bad;
        let rep = verify_classical_nf(&nf, &s).unwrap();
        assert!(!rep.ok);
        assert_eq!(rep.first_failure.unwrap().0, 3);
    }

    #[test]
    fn idempotent_on_normal_form() {
        let c = Cuts::new(6, 0);
        let x = P::x(1, c, 0);
        let xi = P::xi(1, c, 0);
        let s = sys(vec![&(&x * &xi) + &x.pow(3)]);
        let nf = classical_normal_form(&s, 6, NfOptions::default()).unwrap();
        let again: Vec<P> =
            nf.f.iter()
                .map(|fi| fi.with_cuts(c).expand(&nf.q))
                .collect();
        let nf2 = classical_normal_form(&sys(again), 6, NfOptions::default()).unwrap();
        assert!(nf2.generators.is_empty());
    }
}
