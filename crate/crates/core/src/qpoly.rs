//! Polynomials in the model quadratics `q_1..q_n` (and `hbar`).
//!
//! A `q`-monomial `hbar^h q^gamma` has phase degree `2|gamma|`, so it is
//! truncated by the same [`Cuts`] as symbols.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::linalg::Mat;
use crate::poly::{exponent_vectors, phase_basis, Cuts, PolySymbol};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct QMono {
    pub gamma: Vec<u32>,
    pub h: u32,
}

impl QMono {
    pub fn degree(&self) -> u32 {
        self.gamma.iter().sum()
    }
}

/// Degree in `q`, then `hbar`, then `q_1` heaviest first.
impl Ord for QMono {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then(self.h.cmp(&other.h))
            .then_with(|| other.gamma.cmp(&self.gamma))
    }
}

impl PartialOrd for QMono {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Clone, Debug)]
pub struct QPoly<C> {
    nq: usize,
    cuts: Cuts,
    terms: BTreeMap<QMono, C>,
}

impl<C: Scalar> PartialEq for QPoly<C> {
    fn eq(&self, other: &Self) -> bool {
        self.nq == other.nq && self.terms == other.terms
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum QPolyError {
    #[error("symbol is not a polynomial in the model quadratics (degree {degree}, hbar^{h})")]
    NotInKernel { degree: u32, h: u32 },
    #[error("matrix is singular at q = 0")]
    Singular,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QTermJson {
    pub q: Vec<u32>,
    #[serde(default)]
    pub h: u32,
    pub coeff: Value,
}

impl<C: Scalar> QPoly<C> {
    pub fn zero(nq: usize, cuts: Cuts) -> Self {
        QPoly {
            nq,
            cuts,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nq: usize, cuts: Cuts, c: C) -> Self {
        let mut p = Self::zero(nq, cuts);
        p.add_term(
            QMono {
                gamma: vec![0; nq],
                h: 0,
            },
            c,
        );
        p
    }

    /// `q_j`.
    pub fn var(nq: usize, cuts: Cuts, j: usize) -> Self {
        let mut gamma = vec![0; nq];
        gamma[j] = 1;
        let mut p = Self::zero(nq, cuts);
        p.add_term(QMono { gamma, h: 0 }, C::one());
        p
    }

    pub fn nq(&self) -> usize {
        self.nq
    }

    pub fn cuts(&self) -> Cuts {
        self.cuts
    }

    pub fn terms(&self) -> impl Iterator<Item = (&QMono, &C)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, m: QMono, c: C) {
        if c.is_zero() || !self.cuts.admits_grade(2 * m.degree(), m.h) {
            return;
        }
        let v = match self.terms.remove(&m) {
            Some(old) => old + c,
            None => c,
        };
        if !v.is_zero() {
            self.terms.insert(m, v);
        }
    }

    pub fn coeff(&self, m: &QMono) -> C {
        self.terms.get(m).cloned().unwrap_or_else(C::zero)
    }

    /// Value at `q = 0, hbar = 0`.
    pub fn constant_term(&self) -> C {
        self.coeff(&QMono {
            gamma: vec![0; self.nq],
            h: 0,
        })
    }

    pub fn with_cuts(&self, cuts: Cuts) -> Self {
        let mut p = Self::zero(self.nq, cuts);
        for (m, c) in &self.terms {
            p.add_term(m.clone(), c.clone());
        }
        p
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut p = self.with_cuts(self.cuts.min(&o.cuts));
        for (m, c) in &o.terms {
            p.add_term(m.clone(), c.clone());
        }
        p
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.scale(&-C::one()))
    }

    pub fn scale(&self, s: &C) -> Self {
        let mut p = Self::zero(self.nq, self.cuts);
        for (m, c) in &self.terms {
            p.add_term(m.clone(), c.clone() * s.clone());
        }
        p
    }

    pub fn mul(&self, o: &Self) -> Self {
        let mut p = Self::zero(self.nq, self.cuts.min(&o.cuts));
        for (ma, ca) in &self.terms {
            for (mb, cb) in &o.terms {
                let m = QMono {
                    gamma: ma.gamma.iter().zip(&mb.gamma).map(|(a, b)| a + b).collect(),
                    h: ma.h + mb.h,
                };
                p.add_term(m, ca.clone() * cb.clone());
            }
        }
        p
    }

    pub fn times_h(&self, k: u32) -> Self {
        let mut p = Self::zero(self.nq, self.cuts);
        for (m, c) in &self.terms {
            p.add_term(
                QMono {
                    gamma: m.gamma.clone(),
                    h: m.h + k,
                },
                c.clone(),
            );
        }
        p
    }

    /// Coefficient of `hbar^k` (as an `hbar`-free polynomial).
    pub fn h_coeff(&self, k: u32) -> Self {
        let mut p = Self::zero(self.nq, self.cuts);
        for (m, c) in self.terms.iter().filter(|(m, _)| m.h == k) {
            p.add_term(
                QMono {
                    gamma: m.gamma.clone(),
                    h: 0,
                },
                c.clone(),
            );
        }
        p
    }

    /// `d/dq_j`.
    pub fn derivative(&self, j: usize) -> Self {
        let mut p = Self::zero(self.nq, self.cuts);
        for (m, c) in &self.terms {
            let e = m.gamma[j];
            if e == 0 {
                continue;
            }
            let mut gamma = m.gamma.clone();
            gamma[j] -= 1;
            p.add_term(QMono { gamma, h: m.h }, c.clone() * C::from_i64(e as i64));
        }
        p
    }

    pub fn map_coeffs<D: Scalar>(&self, f: impl Fn(&C) -> D) -> QPoly<D> {
        let mut p = QPoly::zero(self.nq, self.cuts);
        for (m, c) in &self.terms {
            p.add_term(m.clone(), f(c));
        }
        p
    }

    /// The symbol `sum c hbar^h q^gamma` in `n` degrees of freedom.
    pub fn expand(&self, q: &[PolySymbol<C>]) -> PolySymbol<C> {
        assert_eq!(q.len(), self.nq, "one symbol per q variable");
        let n = q.first().map_or(1, PolySymbol::n);
        let cuts = self.cuts;
        let mut cache: BTreeMap<Vec<u32>, PolySymbol<C>> = BTreeMap::new();
        let mut out = PolySymbol::zero(n, cuts);
        for (m, c) in &self.terms {
            let base = cache
                .entry(m.gamma.clone())
                .or_insert_with(|| q_power(q, &m.gamma, cuts))
                .clone();
            let t = base.times_h(m.h).scale_by(c);
            for (tm, tc) in t.terms() {
                out.add_term(tm.clone(), tc.clone());
            }
        }
        out
    }

    /// Recovers the `q`-polynomial whose expansion is `g`, degree by degree.
    pub fn from_symbol(g: &PolySymbol<C>, q: &[PolySymbol<C>]) -> Result<Self, QPolyError> {
        Self::from_symbol_at(g, q, 0.0)
    }

    /// [`QPoly::from_symbol`] with float noise judged against at least
    /// `noise_scale`.
    pub fn from_symbol_at(
        g: &PolySymbol<C>,
        q: &[PolySymbol<C>],
        noise_scale: f64,
    ) -> Result<Self, QPolyError> {
        let nq = q.len();
        let n = g.n();
        let cuts = g.cuts();
        let mut out = Self::zero(nq, cuts);
        let gscale = g.scale().max(noise_scale);
        let mut grades: Vec<(u32, u32)> = g.occupied_grades();
        grades.sort_unstable();
        for (d, h) in grades {
            let part = g.homogeneous(d, h).h_coeff(h);
            if part.is_negligible(gscale) {
                continue;
            }
            if d % 2 == 1 {
                return Err(QPolyError::NotInKernel { degree: d, h });
            }
            let gammas = exponent_vectors(nq, d / 2);
            let local = Cuts::new(d, 0);
            let basis = phase_basis(n, d);
            let cols: Vec<PolySymbol<C>> = gammas
                .iter()
                .map(|gm| q_power(&restrict(q, local), gm, local))
                .collect();
            let a = Mat::from_fn(basis.len(), cols.len(), |i, j| cols[j].coeff(&basis[i]));
            let b: Vec<C> = basis.iter().map(|m| part.coeff(m)).collect();
            let x = a
                .solve_at(&b, gscale)
                .ok_or(QPolyError::NotInKernel { degree: d, h })?;
            // the float solver can accept a near-miss; verify
            let scale = gscale;
            let ax = a.mul_vec(&x);
            if ax
                .iter()
                .zip(&b)
                .any(|(u, v)| !(u.clone() - v.clone()).negligible(scale))
            {
                return Err(QPolyError::NotInKernel { degree: d, h });
            }
            for (gm, c) in gammas.into_iter().zip(x) {
                out.add_term(QMono { gamma: gm, h }, c);
            }
        }
        Ok(out)
    }

    pub fn to_json(&self) -> Vec<QTermJson> {
        self.terms
            .iter()
            .map(|(m, c)| QTermJson {
                q: m.gamma.clone(),
                h: m.h,
                coeff: c.to_json(),
            })
            .collect()
    }

    pub fn from_json(nq: usize, cuts: Cuts, terms: &[QTermJson]) -> Result<Self, String> {
        let mut p = Self::zero(nq, cuts);
        for t in terms {
            if t.q.len() != nq {
                return Err(format!("q exponent vector must have length {nq}"));
            }
            let c = C::from_json(&t.coeff).map_err(|e| e.to_string())?;
            p.add_term(
                QMono {
                    gamma: t.q.clone(),
                    h: t.h,
                },
                c,
            );
        }
        Ok(p)
    }
}

fn restrict<C: Scalar>(q: &[PolySymbol<C>], cuts: Cuts) -> Vec<PolySymbol<C>> {
    q.iter().map(|s| s.with_cuts(cuts)).collect()
}

fn q_power<C: Scalar>(q: &[PolySymbol<C>], gamma: &[u32], cuts: Cuts) -> PolySymbol<C> {
    let n = q.first().map_or(1, PolySymbol::n);
    let mut acc = PolySymbol::constant(n, cuts, C::one());
    for (qj, &e) in q.iter().zip(gamma) {
        for _ in 0..e {
            acc = &acc * &qj.with_cuts(cuts);
        }
    }
    acc
}

/// Splits `g = g(0) + sum_j g_j q_j`, sending each monomial to the first
/// `q_j` it contains (so `q_1` absorbs first). `hbar` powers ride along: a
/// pure `hbar^k` term belongs to the constant.
pub fn taylor_division<C: Scalar>(g: &QPoly<C>) -> (QPoly<C>, Vec<QPoly<C>>) {
    let nq = g.nq;
    let mut g0 = QPoly::zero(nq, g.cuts);
    let mut coeffs = vec![QPoly::zero(nq, g.cuts); nq];
    for (m, c) in &g.terms {
        match m.gamma.iter().position(|&e| e > 0) {
            None => g0.add_term(m.clone(), c.clone()),
            Some(j) => {
                let mut gamma = m.gamma.clone();
                gamma[j] -= 1;
                coeffs[j].add_term(QMono { gamma, h: m.h }, c.clone());
            }
        }
    }
    (g0, coeffs)
}

/// Square matrix of `q`-polynomials.
pub type QMat<C> = Vec<Vec<QPoly<C>>>;

pub fn qmat_mul<C: Scalar>(a: &QMat<C>, b: &QMat<C>) -> QMat<C> {
    let n = a.len();
    let m = b.first().map_or(0, Vec::len);
    (0..n)
        .map(|i| {
            (0..m)
                .map(|j| {
                    let mut acc = QPoly::zero(a[i][0].nq, a[i][0].cuts.min(&b[0][j].cuts));
                    for (k, row) in b.iter().enumerate() {
                        acc = acc.add(&a[i][k].mul(&row[j]));
                    }
                    acc
                })
                .collect()
        })
        .collect()
}

pub fn qmat_vec<C: Scalar>(a: &QMat<C>, v: &[QPoly<C>]) -> Vec<QPoly<C>> {
    a.iter()
        .map(|row| {
            let mut acc = QPoly::zero(v[0].nq, v[0].cuts);
            for (aij, vj) in row.iter().zip(v) {
                acc = acc.add(&aij.mul(vj));
            }
            acc
        })
        .collect()
}

/// Constant parts `M(0)` (at `hbar = 0`).
pub fn qmat_at_zero<C: Scalar>(a: &QMat<C>) -> Mat<C> {
    let n = a.len();
    Mat::from_fn(n, n, |i, j| a[i][j].constant_term())
}

pub fn qmat_from_scalars<C: Scalar>(m: &Mat<C>, nq: usize, cuts: Cuts) -> QMat<C> {
    (0..m.rows())
        .map(|i| {
            (0..m.cols())
                .map(|j| QPoly::constant(nq, cuts, m[(i, j)].clone()))
                .collect()
        })
        .collect()
}

/// Inverse as a formal series: `M^-1 = sum_k (-M0^-1 M')^k M0^-1` with
/// `M' = M - M(0)`, which terminates under the cuts.
pub fn qmat_inverse<C: Scalar>(a: &QMat<C>) -> Result<QMat<C>, QPolyError> {
    let n = a.len();
    let nq = a[0][0].nq;
    let cuts = a.iter().flatten().fold(a[0][0].cuts, |c, p| c.min(&p.cuts));
    let m0 = qmat_at_zero(a);
    let m0i = m0.inverse().ok_or(QPolyError::Singular)?;
    let m0i_q = qmat_from_scalars(&m0i, nq, cuts);
    let rest: QMat<C> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| a[i][j].sub(&QPoly::constant(nq, cuts, m0[(i, j)].clone())))
                .collect()
        })
        .collect();
    let step: QMat<C> = qmat_mul(&m0i_q, &rest)
        .into_iter()
        .map(|row| row.into_iter().map(|p| p.scale(&-C::one())).collect())
        .collect();
    let mut acc = m0i_q.clone();
    let mut term = m0i_q;
    loop {
        term = qmat_mul(&step, &term);
        if term.iter().flatten().all(QPoly::is_zero) {
            return Ok(acc);
        }
        acc = acc
            .iter()
            .zip(&term)
            .map(|(ra, rt)| ra.iter().zip(rt).map(|(x, y)| x.add(y)).collect())
            .collect();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;
    use crate::symplectic::{standard_basis, CartanType};

    type Q = QPoly<Rational>;

    fn r(v: i64) -> Rational {
        Rational::from_i64(v)
    }

    #[test]
    fn greedy_division() {
        let c = Cuts::new(8, 0);
        let q1 = Q::var(2, c, 0);
        let q2 = Q::var(2, c, 1);
        let g = q1.mul(&q1).add(&q1.mul(&q2));
        let (g0, co) = taylor_division(&g);
        assert!(g0.is_zero());
        assert_eq!(co[0], q1.add(&q2));
        assert!(co[1].is_zero());

        let (g0, co) = taylor_division(&Q::constant(2, c, r(1)));
        assert_eq!(g0, Q::constant(2, c, r(1)));
        assert!(co.iter().all(Q::is_zero));

        let (g0, co) = taylor_division(&q2);
        assert!(g0.is_zero());
        assert!(co[0].is_zero());
        assert_eq!(co[1], Q::constant(2, c, r(1)));
    }

    #[test]
    fn symbol_round_trip() {
        let c = Cuts::new(8, 1);
        let ty = CartanType::new(1, 0, 1);
        let qs = standard_basis::<Rational>(&ty, c);
        let p = Q::var(3, c, 0)
            .mul(&Q::var(3, c, 2))
            .add(&Q::var(3, c, 1).scale(&r(3)))
            .add(&Q::var(3, c, 1).mul(&Q::var(3, c, 1)).times_h(1));
        let s = p.expand(&qs);
        assert_eq!(Q::from_symbol(&s, &qs).unwrap(), p);
    }

    #[test]
    fn non_kernel_symbol_rejected() {
        let c = Cuts::new(4, 0);
        let ty = CartanType::new(0, 1, 0);
        let qs = standard_basis::<Rational>(&ty, c);
        let x = PolySymbol::<Rational>::x(1, c, 0);
        assert!(matches!(
            Q::from_symbol(&(&x * &x), &qs),
            Err(QPolyError::NotInKernel { degree: 2, h: 0 })
        ));
    }

    #[test]
    fn series_inverse() {
        let c = Cuts::new(8, 0);
        let q1 = Q::var(1, c, 0);
        let m = vec![vec![Q::constant(1, c, r(1)).add(&q1)]];
        let inv = qmat_inverse(&m).unwrap();
        let prod = qmat_mul(&m, &inv);
        assert_eq!(prod[0][0], Q::constant(1, c, r(1)));
        // 1 - q + q^2 - q^3 + q^4 up to q-degree 4
        assert_eq!(
            inv[0][0].coeff(&QMono {
                gamma: vec![3],
                h: 0
            }),
            r(-1)
        );
    }
}
