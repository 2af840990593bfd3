use std::collections::btree_map::Entry;
use std::collections::hash_map::Entry as HEntry;
use std::collections::{BTreeMap, HashMap};
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use super::monomial::{phase_basis, Monomial};
use super::PolyError;
use crate::linalg::Mat;
use crate::scalar::{ComplexScalar, RealScalar, Scalar};

/// Truncation cuts.
///
/// `deg` bounds the phase degree, `h` the power of `hbar`, and `weight` the
/// graded weight `degree + 2 * h_power`. [`Cuts::new`] sets the weight to
/// `deg + 2h`, where it never binds and the two expansions are independent.
/// Star products and Moyal brackets preserve weight, so semiclassical
/// computations run under [`Cuts::graded`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Cuts {
    pub deg: u32,
    pub h: u32,
    pub weight: u32,
}

impl Cuts {
    pub fn new(deg: u32, h: u32) -> Self {
        Cuts {
            deg,
            h,
            weight: deg + 2 * h,
        }
    }

    pub fn classical(deg: u32) -> Self {
        Self::new(deg, 0)
    }

    /// Weight-graded cuts: every `(degree, h)` with `degree + 2h <= weight`
    /// and `h <= h_cut`.
    pub fn graded(weight: u32, h: u32) -> Self {
        Cuts {
            deg: weight,
            h,
            weight,
        }
    }

    pub fn admits(&self, m: &Monomial) -> bool {
        self.admits_grade(m.degree(), m.h())
    }

    /// Whether phase degree `d` at `hbar^h` survives the cuts.
    pub fn admits_grade(&self, d: u32, h: u32) -> bool {
        d <= self.deg && h <= self.h && d + 2 * h <= self.weight
    }

    pub fn min(&self, other: &Cuts) -> Cuts {
        let deg = self.deg.min(other.deg);
        let h = self.h.min(other.h);
        Cuts {
            deg,
            h,
            weight: self.weight.min(other.weight).min(deg + 2 * h),
        }
    }

    /// Highest phase degree kept at `hbar^k`.
    pub fn deg_at(&self, k: u32) -> Option<u32> {
        if k > self.h || 2 * k > self.weight {
            return None;
        }
        Some(self.deg.min(self.weight - 2 * k))
    }

    pub fn is_graded(&self) -> bool {
        self.weight < self.deg + 2 * self.h
    }
}

/// Truncated formal series in `x_1..x_n, xi_1..xi_n, hbar`.
///
/// Terms are kept sparse in a map ordered by [`Monomial`]'s graded order; no
/// stored coefficient is zero and no stored monomial violates the cuts.
/// Equality ignores the cuts and compares terms.
#[derive(Clone, Debug)]
pub struct PolySymbol<C> {
    n: usize,
    cuts: Cuts,
    terms: BTreeMap<Monomial, C>,
}

impl<C: Scalar> PartialEq for PolySymbol<C> {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.terms == other.terms
    }
}

pub(crate) fn accumulate<C: Scalar>(map: &mut HashMap<Monomial, C>, m: Monomial, c: C) {
    if c.is_zero() {
        return;
    }
    match map.entry(m) {
        HEntry::Occupied(mut e) => {
            let old = std::mem::replace(e.get_mut(), C::zero());
            *e.get_mut() = old + c;
        }
        HEntry::Vacant(e) => {
            e.insert(c);
        }
    }
}

/// Unordered term accumulator; zeros and out-of-cut terms are dropped when
/// it becomes a symbol.
pub(crate) struct Accumulator<C> {
    n: usize,
    cuts: Cuts,
    map: HashMap<Monomial, C>,
}

impl<C: Scalar> Accumulator<C> {
    pub(crate) fn new(n: usize, cuts: Cuts) -> Self {
        Accumulator {
            n,
            cuts,
            map: HashMap::new(),
        }
    }

    pub(crate) fn add(&mut self, m: Monomial, c: C) {
        accumulate(&mut self.map, m, c);
    }

    pub(crate) fn finish(self) -> PolySymbol<C> {
        let cuts = self.cuts;
        PolySymbol {
            n: self.n,
            cuts,
            terms: self
                .map
                .into_iter()
                .filter(|(m, c)| !c.is_zero() && cuts.admits(m))
                .collect(),
        }
    }
}

/// Homogeneous `(degree k, hbar^h)` part as coefficients on the ordered basis
/// of `P_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct GradedComponent<C> {
    pub n: usize,
    pub k: u32,
    pub h: u32,
    pub coeffs: Vec<C>,
}

impl<C: Scalar> GradedComponent<C> {
    pub fn basis(&self) -> Vec<Monomial> {
        phase_basis(self.n, self.k)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Scalar::is_zero)
    }

    pub fn to_symbol(&self, cuts: Cuts) -> PolySymbol<C> {
        let basis = self.basis();
        PolySymbol::from_terms(
            self.n,
            cuts,
            basis
                .into_iter()
                .zip(self.coeffs.iter().cloned())
                .map(|(m, c)| (m.with_h(self.h), c)),
        )
    }
}

impl<C: Scalar> PolySymbol<C> {
    pub fn zero(n: usize, cuts: Cuts) -> Self {
        PolySymbol {
            n,
            cuts,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(n: usize, cuts: Cuts, c: C) -> Self {
        Self::monomial(n, cuts, Monomial::one(n), c)
    }

    pub fn monomial(n: usize, cuts: Cuts, m: Monomial, c: C) -> Self {
        assert_eq!(m.n(), n, "monomial dimension mismatch");
        let mut s = Self::zero(n, cuts);
        s.add_term(m, c);
        s
    }

    /// Coordinate `z_var`, where `var < n` is `x_{var+1}` and `var >= n` is
    /// `xi_{var-n+1}`.
    pub fn var(n: usize, cuts: Cuts, var: usize) -> Self {
        assert!(var < 2 * n, "variable index out of range");
        Self::monomial(n, cuts, Monomial::one(n).with_exp(var, 1), C::one())
    }

    pub fn x(n: usize, cuts: Cuts, i: usize) -> Self {
        Self::var(n, cuts, i)
    }

    pub fn xi(n: usize, cuts: Cuts, i: usize) -> Self {
        Self::var(n, cuts, n + i)
    }

    pub fn hbar(n: usize, cuts: Cuts) -> Self {
        Self::monomial(n, cuts, Monomial::one(n).with_h(1), C::one())
    }

    pub fn from_terms(
        n: usize,
        cuts: Cuts,
        terms: impl IntoIterator<Item = (Monomial, C)>,
    ) -> Self {
        let mut s = Self::zero(n, cuts);
        for (m, c) in terms {
            assert_eq!(m.n(), n, "monomial dimension mismatch");
            s.add_term(m, c);
        }
        s
    }

    /// Adds `c * m`, dropping it if the cuts exclude `m` and pruning zeros.
    pub fn add_term(&mut self, m: Monomial, c: C) {
        if c.is_zero() || !self.cuts.admits(&m) {
            return;
        }
        match self.terms.entry(m) {
            Entry::Vacant(e) => {
                e.insert(c);
            }
            Entry::Occupied(mut e) => {
                let v = e.get().clone() + c;
                if v.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = v;
                }
            }
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn cuts(&self) -> Cuts {
        self.cuts
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &C)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, m: &Monomial) -> C {
        self.terms.get(m).cloned().unwrap_or_else(C::zero)
    }

    /// Re-truncates to `cuts` (which become the symbol's cuts).
    pub fn with_cuts(&self, cuts: Cuts) -> Self {
        Self::from_terms(
            self.n,
            cuts,
            self.terms.iter().map(|(m, c)| (m.clone(), c.clone())),
        )
    }

    pub fn max_degree(&self) -> Option<u32> {
        self.terms.keys().map(Monomial::degree).max()
    }

    pub fn min_degree(&self) -> Option<u32> {
        self.terms.keys().map(Monomial::degree).min()
    }

    pub fn max_h(&self) -> Option<u32> {
        self.terms.keys().map(Monomial::h).max()
    }

    pub fn min_h(&self) -> Option<u32> {
        self.terms.keys().map(Monomial::h).min()
    }

    /// Largest coefficient modulus.
    pub fn scale(&self) -> f64 {
        self.terms
            .values()
            .map(Scalar::magnitude)
            .fold(0.0, f64::max)
    }

    /// Every coefficient negligible relative to `scale` (exactly zero for
    /// exact fields).
    pub fn is_negligible(&self, scale: f64) -> bool {
        self.terms.values().all(|c| c.negligible(scale))
    }

    /// Drops coefficients negligible relative to `scale`; a no-op on exact
    /// fields.
    pub fn chop(&self, scale: f64) -> Self {
        if C::is_exact() {
            return self.clone();
        }
        PolySymbol {
            n: self.n,
            cuts: self.cuts,
            terms: self
                .terms
                .iter()
                .filter(|(_, c)| !c.negligible(scale))
                .map(|(m, c)| (m.clone(), c.clone()))
                .collect(),
        }
    }

    fn check_same(&self, other: &Self) -> Result<(), PolyError> {
        if self.n != other.n {
            return Err(PolyError::DimensionMismatch {
                left: self.n,
                right: other.n,
            });
        }
        Ok(())
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self, PolyError> {
        self.check_same(other)?;
        let mut out = self.with_cuts(self.cuts.min(&other.cuts));
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self, PolyError> {
        self.check_same(other)?;
        let mut out = self.with_cuts(self.cuts.min(&other.cuts));
        for (m, c) in &other.terms {
            out.add_term(m.clone(), -c.clone());
        }
        Ok(out)
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self, PolyError> {
        self.check_same(other)?;
        let cuts = self.cuts.min(&other.cuts);
        let mut out = Accumulator::new(self.n, cuts);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                let d = ma.degree() + mb.degree();
                let h = ma.h() + mb.h();
                if d > cuts.deg || h > cuts.h || d + 2 * h > cuts.weight {
                    continue;
                }
                out.add(ma.mul(mb), ca.clone() * cb.clone());
            }
        }
        Ok(out.finish())
    }

    pub fn scale_by(&self, s: &C) -> Self {
        if s.is_zero() {
            return Self::zero(self.n, self.cuts);
        }
        Self::from_terms(
            self.n,
            self.cuts,
            self.terms
                .iter()
                .map(|(m, c)| (m.clone(), c.clone() * s.clone())),
        )
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = Self::constant(self.n, self.cuts, C::one());
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    pub fn map_coeffs<D: Scalar>(&self, f: impl Fn(&C) -> D) -> PolySymbol<D> {
        PolySymbol::from_terms(
            self.n,
            self.cuts,
            self.terms.iter().map(|(m, c)| (m.clone(), f(c))),
        )
    }

    /// Keeps the terms for which `keep` holds.
    pub fn filter(&self, keep: impl Fn(&Monomial) -> bool) -> Self {
        PolySymbol {
            n: self.n,
            cuts: self.cuts,
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| keep(m))
                .map(|(m, c)| (m.clone(), c.clone()))
                .collect(),
        }
    }

    /// Homogeneous part of phase degree `k` at `hbar^h` (still carrying its
    /// `hbar` power).
    pub fn homogeneous(&self, k: u32, h: u32) -> Self {
        self.filter(|m| m.degree() == k && m.h() == h)
    }

    /// Phase-degree `k` part, all `hbar` powers.
    pub fn degree_part(&self, k: u32) -> Self {
        self.filter(|m| m.degree() == k)
    }

    /// Coefficient of `hbar^k` as an `hbar`-free symbol.
    pub fn h_coeff(&self, k: u32) -> Self {
        Self::from_terms(
            self.n,
            self.cuts,
            self.terms
                .iter()
                .filter(|(m, _)| m.h() == k)
                .map(|(m, c)| (m.with_h(0), c.clone())),
        )
    }

    /// Multiplies by `hbar^k`.
    pub fn times_h(&self, k: u32) -> Self {
        Self::from_terms(
            self.n,
            self.cuts,
            self.terms
                .iter()
                .map(|(m, c)| (m.with_h(m.h() + k), c.clone())),
        )
    }

    /// Divides by `hbar^k`; terms of lower `hbar` order must be absent.
    pub fn divide_h(&self, k: u32) -> Self {
        assert!(
            self.min_h().is_none_or(|h| h >= k),
            "division by hbar^{k} of a symbol with lower hbar order"
        );
        Self::from_terms(
            self.n,
            self.cuts,
            self.terms
                .iter()
                .map(|(m, c)| (m.with_h(m.h() - k), c.clone())),
        )
    }

    /// Partial derivative in phase variable `var`.
    pub fn derivative(&self, var: usize) -> Self {
        let mut out = Self::zero(self.n, self.cuts);
        for (m, c) in &self.terms {
            let e = m.exp(var);
            if e == 0 {
                continue;
            }
            out.add_term(m.with_exp(var, e - 1), c.clone() * C::from_i64(e as i64));
        }
        out
    }

    pub fn grade_component(&self, k: u32, h: u32) -> Result<GradedComponent<C>, PolyError> {
        if k > self.cuts.deg || h > self.cuts.h {
            return Err(PolyError::OutOfRange {
                k,
                h,
                deg_cut: self.cuts.deg,
                h_cut: self.cuts.h,
            });
        }
        let coeffs = phase_basis(self.n, k)
            .into_iter()
            .map(|m| self.coeff(&m.with_h(h)))
            .collect();
        Ok(GradedComponent {
            n: self.n,
            k,
            h,
            coeffs,
        })
    }

    /// Every `(degree, hbar)` slot that holds at least one term.
    pub fn occupied_grades(&self) -> Vec<(u32, u32)> {
        let mut v: Vec<(u32, u32)> = self.terms.keys().map(|m| (m.degree(), m.h())).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    pub fn evaluate(&self, point: &[C], hval: &C) -> Result<C, PolyError> {
        if point.len() != 2 * self.n {
            return Err(PolyError::SizeMismatch {
                expected: 2 * self.n,
                got: point.len(),
            });
        }
        let mut acc = C::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone() * hval.pow(m.h());
            for (v, &e) in m.exps().iter().enumerate() {
                if e > 0 {
                    t = t * point[v].pow(e as u32);
                }
            }
            acc = acc + t;
        }
        Ok(acc)
    }

    /// `p(S z)`: each phase variable `z_a` becomes `sum_b S[a][b] z_b`.
    ///
    /// Images of monomials are memoized, each built from the image of its
    /// predecessor times one linear form.
    pub fn substitute_linear(&self, s: &Mat<C>) -> Result<Self, PolyError> {
        let dim = 2 * self.n;
        if s.rows() != dim || s.cols() != dim {
            return Err(PolyError::SizeMismatch {
                expected: dim,
                got: s.rows().max(s.cols()),
            });
        }
        let n = self.n;
        let linear: Vec<Vec<(Monomial, C)>> = (0..dim)
            .map(|a| {
                (0..dim)
                    .filter(|&b| !s[(a, b)].is_zero())
                    .map(|b| (Monomial::one(n).with_exp(b, 1), s[(a, b)].clone()))
                    .collect()
            })
            .collect();
        let mut memo: HashMap<Monomial, Vec<(Monomial, C)>> = HashMap::new();
        memo.insert(Monomial::one(n), vec![(Monomial::one(n), C::one())]);
        fn image<C: Scalar>(
            m: &Monomial,
            linear: &[Vec<(Monomial, C)>],
            memo: &mut HashMap<Monomial, Vec<(Monomial, C)>>,
        ) {
            if memo.contains_key(m) {
                return;
            }
            let a = m
                .exps()
                .iter()
                .rposition(|&e| e > 0)
                .expect("constant is seeded");
            let parent = m.with_exp(a, m.exp(a) - 1);
            image(&parent, linear, memo);
            let mut acc: HashMap<Monomial, C> = HashMap::new();
            for (pm, pc) in &memo[&parent] {
                for (lm, lc) in &linear[a] {
                    accumulate(&mut acc, pm.mul(lm), pc.clone() * lc.clone());
                }
            }
            let img = acc.into_iter().filter(|(_, c)| !c.is_zero()).collect();
            memo.insert(m.clone(), img);
        }
        let mut out = Accumulator::new(n, self.cuts);
        for (m, c) in &self.terms {
            let phase = m.with_h(0);
            image(&phase, &linear, &mut memo);
            for (tm, tc) in &memo[&phase] {
                out.add(tm.with_h(m.h()), c.clone() * tc.clone());
            }
        }
        Ok(out.finish())
    }

    /// `p(z + z0)`.
    pub fn shift(&self, z0: &[C]) -> Result<Self, PolyError> {
        let dim = 2 * self.n;
        if z0.len() != dim {
            return Err(PolyError::SizeMismatch {
                expected: dim,
                got: z0.len(),
            });
        }
        let cuts = Cuts::new(self.max_degree().unwrap_or(0), self.cuts.h);
        let mut out = Self::zero(self.n, cuts);
        for (m, c) in &self.terms {
            let mut t =
                Self::monomial(self.n, cuts, Monomial::one(self.n).with_h(m.h()), c.clone());
            for (a, &e) in m.exps().iter().enumerate() {
                if e > 0 {
                    let lin =
                        &Self::var(self.n, cuts, a) + &Self::constant(self.n, cuts, z0[a].clone());
                    t = &t * &lin.pow(e as u32);
                }
            }
            for (tm, tc) in t.terms {
                out.add_term(tm, tc);
            }
        }
        Ok(out.with_cuts(self.cuts))
    }

    /// The first `(degree, hbar)` slot (graded order) where `self` and
    /// `other` differ by more than the float slack.
    pub fn first_difference(&self, other: &Self) -> Option<(u32, u32)> {
        let diff = self - other;
        let scale = self.scale().max(other.scale());
        diff.terms
            .iter()
            .filter(|(_, c)| !c.negligible(scale))
            .map(|(m, _)| (m.degree(), m.h()))
            .min_by_key(|&(d, h)| (h, d))
    }
}

impl<R: RealScalar> PolySymbol<R> {
    pub fn complexify(&self) -> PolySymbol<R::Cplx> {
        self.map_coeffs(|c| c.complexify())
    }
}

impl<Z: ComplexScalar> PolySymbol<Z> {
    pub fn re(&self) -> PolySymbol<Z::Real> {
        self.map_coeffs(|c| c.re())
    }

    pub fn im(&self) -> PolySymbol<Z::Real> {
        self.map_coeffs(|c| c.im())
    }
}

impl<C: Scalar> Add for &PolySymbol<C> {
    type Output = PolySymbol<C>;
    fn add(self, rhs: Self) -> PolySymbol<C> {
        self.checked_add(rhs).expect("symbol addition")
    }
}

impl<C: Scalar> Sub for &PolySymbol<C> {
    type Output = PolySymbol<C>;
    fn sub(self, rhs: Self) -> PolySymbol<C> {
        self.checked_sub(rhs).expect("symbol subtraction")
    }
}

impl<C: Scalar> Mul for &PolySymbol<C> {
    type Output = PolySymbol<C>;
    fn mul(self, rhs: Self) -> PolySymbol<C> {
        self.checked_mul(rhs).expect("symbol product")
    }
}

impl<C: Scalar> Neg for &PolySymbol<C> {
    type Output = PolySymbol<C>;
    fn neg(self) -> PolySymbol<C> {
        self.map_coeffs(|c| -c.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    type P = PolySymbol<Rational>;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    #[test]
    fn difference_of_squares() {
        let c = Cuts::new(4, 0);
        let x = P::x(1, c, 0);
        let xi = P::xi(1, c, 0);
        let lhs = &(&x + &xi) * &(&x - &xi);
        let rhs = &(&x * &x) - &(&xi * &xi);
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn additive_identity() {
        let c = Cuts::new(4, 1);
        let a = &P::x(1, c, 0) + &P::hbar(1, c);
        assert_eq!(&a + &P::zero(1, c), a);
    }

    #[test]
    fn truncation_empties_product() {
        let c = Cuts::new(3, 0);
        let m = &P::x(1, c, 0) * &P::xi(1, c, 0);
        assert!((&m * &m).is_zero());
    }

    #[test]
    fn cuts_of_result_are_the_minimum() {
        let a = P::x(1, Cuts::new(5, 2), 0);
        let b = P::x(1, Cuts::new(3, 4), 0);
        assert_eq!((&a + &b).cuts(), Cuts::new(3, 2).min(&Cuts::new(5, 4)));
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let c = Cuts::new(3, 0);
        let a = P::x(1, c, 0);
        let b = P::x(2, c, 0);
        assert!(matches!(
            a.checked_mul(&b),
            Err(PolyError::DimensionMismatch { left: 1, right: 2 })
        ));
    }

    #[test]
    fn grade_component_examples() {
        let c = Cuts::new(4, 2);
        let x = P::x(1, c, 0);
        let p = &x + &(&P::hbar(1, c) * &(&x * &x));
        let g = p.grade_component(2, 1).unwrap();
        // basis of P_2 for n = 1: x^2, x xi, xi^2
        assert_eq!(g.coeffs, vec![q(1, 1), q(0, 1), q(0, 1)]);
        assert!(p.grade_component(2, 0).unwrap().is_zero());
        assert!(p.grade_component(5, 0).is_err());
        assert!(p.grade_component(1, 3).is_err());
    }

    #[test]
    fn evaluate_examples() {
        let c = Cuts::new(4, 1);
        let x = P::x(1, c, 0);
        let xi = P::xi(1, c, 0);
        let osc = &(&x * &x) + &(&xi * &xi);
        assert_eq!(
            osc.evaluate(&[q(1, 1), q(0, 1)], &q(0, 1)).unwrap(),
            q(1, 1)
        );
        let hyp = &x * &xi;
        assert_eq!(
            hyp.evaluate(&[q(2, 1), q(3, 1)], &q(0, 1)).unwrap(),
            q(6, 1)
        );
        let hc = P::hbar(1, c).scale_by(&q(5, 2));
        assert_eq!(hc.evaluate(&[q(0, 1), q(0, 1)], &q(1, 3)).unwrap(), q(5, 6));
    }

    #[test]
    fn swap_frame_maps_x_squared_to_xi_squared() {
        let c = Cuts::new(4, 0);
        let x = P::x(1, c, 0);
        let s: Mat<Rational> = Mat::from_i64(&[&[0, 1], &[-1, 0]]);
        let out = (&x * &x).substitute_linear(&s).unwrap();
        let xi = P::xi(1, c, 0);
        assert_eq!(out, &xi * &xi);
    }

    #[test]
    fn hyperbolic_form_invariant_under_its_flow() {
        let c = Cuts::new(4, 0);
        let p = &P::x(1, c, 0) * &P::xi(1, c, 0);
        let t = q(7, 3);
        let s = Mat::from_rows(vec![vec![t.clone(), q(0, 1)], vec![q(0, 1), t.recip()]]);
        assert_eq!(p.substitute_linear(&s).unwrap(), p);
    }

    #[test]
    fn focus_rotation_invariance() {
        // rotation by the Pythagorean angle cos = 3/5, sin = 4/5 in both planes
        let c = Cuts::new(4, 0);
        let n = 2;
        let x1 = P::x(n, c, 0);
        let x2 = P::x(n, c, 1);
        let e1 = P::xi(n, c, 0);
        let e2 = P::xi(n, c, 1);
        let qf = &(&x1 * &e2) - &(&x2 * &e1);
        let (co, si) = (q(3, 5), q(4, 5));
        let z = q(0, 1);
        let s = Mat::from_rows(vec![
            vec![co.clone(), -si.clone(), z.clone(), z.clone()],
            vec![si.clone(), co.clone(), z.clone(), z.clone()],
            vec![z.clone(), z.clone(), co.clone(), -si.clone()],
            vec![z.clone(), z.clone(), si.clone(), co.clone()],
        ]);
        assert_eq!(qf.substitute_linear(&s).unwrap(), qf);
    }

    #[test]
    fn shift_moves_base_point() {
        let c = Cuts::new(4, 0);
        let x = P::x(1, c, 0);
        let p = &x * &x;
        let shifted = p.shift(&[q(1, 1), q(0, 1)]).unwrap();
        // (x + 1)^2
        let expect = &(&p + &x.scale_by(&q(2, 1))) + &P::constant(1, c, q(1, 1));
        assert_eq!(shifted, expect);
    }

    #[test]
    fn graded_cuts_drop_heavy_terms() {
        let c = Cuts::graded(4, 2);
        let x = P::x(1, c, 0);
        let h = P::hbar(1, c);
        assert!((&(&h * &h) * &x).is_zero());
        assert!(!(&h * &(&x * &x)).is_zero());
        assert_eq!(c.deg_at(1), Some(2));
        assert_eq!(c.deg_at(3), None);
    }
}
