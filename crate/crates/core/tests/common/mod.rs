//! Shared test oracles.
#![allow(dead_code)]

use std::collections::BTreeMap;

use morse_nf::{Cuts, GaussRational, Monomial, PolySymbol, Rational, Scalar};

/// Polynomial differential operator `sum c x^j d^k hbar^h` in normal order
/// (multiplications left of derivatives). Keys are `(j, k, h)`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Operator {
    pub n: usize,
    pub terms: BTreeMap<(Vec<u32>, Vec<u32>, u32), GaussRational>,
}

fn binom(n: u32, k: u32) -> i64 {
    (0..k).fold(1i64, |acc, i| acc * (n - i) as i64 / (i + 1) as i64)
}

fn falling(n: u32, r: u32) -> i64 {
    (0..r).map(|i| (n - i) as i64).product()
}

fn real(v: i64) -> GaussRational {
    GaussRational::from_i64(v)
}

impl Operator {
    pub fn zero(n: usize) -> Self {
        Operator {
            n,
            terms: BTreeMap::new(),
        }
    }

    fn add_term(&mut self, key: (Vec<u32>, Vec<u32>, u32), c: GaussRational) {
        let e = self.terms.entry(key).or_insert_with(GaussRational::zero);
        *e = e.clone() + c;
        self.terms.retain(|_, v| !v.is_zero());
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut out = self.clone();
        for (k, c) in &o.terms {
            out.add_term(k.clone(), c.clone());
        }
        out
    }

    pub fn scale(&self, c: &GaussRational) -> Self {
        let mut out = Self::zero(self.n);
        for (k, v) in &self.terms {
            out.add_term(k.clone(), v.clone() * c.clone());
        }
        out
    }

    /// Multiplication by `x_j^e`.
    pub fn x_pow(n: usize, j: usize, e: u32) -> Self {
        let mut x = vec![0; n];
        x[j] = e;
        let mut out = Self::zero(n);
        out.add_term((x, vec![0; n], 0), real(1));
        out
    }

    /// `(-i hbar d_j)^e`.
    pub fn xi_pow(n: usize, j: usize, e: u32) -> Self {
        let mut d = vec![0; n];
        d[j] = e;
        let c = (0..e).fold(real(1), |acc, _| {
            acc * (GaussRational::zero() - GaussRational::i())
        });
        let mut out = Self::zero(n);
        out.add_term((vec![0; n], d, e), c);
        out
    }

    /// Composition by the Leibniz rule
    /// `d^k x^l = sum_r C(k,r) l!/(l-r)! x^(l-r) d^(k-r)`, one variable at a time.
    pub fn compose(&self, o: &Self) -> Self {
        let n = self.n;
        let mut out = Self::zero(n);
        for ((xa, da, ha), ca) in &self.terms {
            for ((xb, db, hb), cb) in &o.terms {
                // expand each variable independently, then take the product
                let mut partial: Vec<(Vec<u32>, Vec<u32>, i64)> = vec![(vec![0; n], vec![0; n], 1)];
                for v in 0..n {
                    let (k, l) = (da[v], xb[v]);
                    let mut next = Vec::new();
                    for (px, pd, pc) in &partial {
                        for r in 0..=k.min(l) {
                            let mut nx = px.clone();
                            let mut nd = pd.clone();
                            nx[v] = xa[v] + l - r;
                            nd[v] = k - r + db[v];
                            next.push((nx, nd, pc * binom(k, r) * falling(l, r)));
                        }
                    }
                    partial = next;
                }
                for (x, d, c) in partial {
                    out.add_term((x, d, ha + hb), ca.clone() * cb.clone() * real(c));
                }
            }
        }
        out
    }
}

/// Weyl quantization of `x^a xi^b` in one variable (McCoy's symmetric
/// ordering): `2^-a sum_k C(a,k) x^k xi^b x^(a-k)`.
fn weyl_1d(n: usize, j: usize, a: u32, b: u32) -> Operator {
    let mut out = Operator::zero(n);
    for k in 0..=a {
        let t = Operator::x_pow(n, j, k)
            .compose(&Operator::xi_pow(n, j, b))
            .compose(&Operator::x_pow(n, j, a - k));
        out = out.add(&t.scale(&real(binom(a, k))));
    }
    let half_pow = GaussRational::from_rational(&(Rational::from(1) / Rational::from(1i64 << a)));
    out.scale(&half_pow)
}

/// Weyl quantization of a symbol, monomial by monomial.
pub fn weyl(p: &PolySymbol<GaussRational>) -> Operator {
    let n = p.n();
    let mut out = Operator::zero(n);
    for (m, c) in p.terms() {
        let (x, xi) = m.split();
        let mut op = Operator::zero(n);
        op.add_term((vec![0; n], vec![0; n], m.h()), real(1));
        for j in 0..n {
            op = op.compose(&weyl_1d(n, j, x[j], xi[j]));
        }
        out = out.add(&op.scale(c));
    }
    out
}

/// All phase monomials with total degree `<= d`.
pub fn monomials(n: usize, d: u32) -> Vec<Monomial> {
    fn rec(n: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if cur.len() == 2 * n {
            out.push(cur.clone());
            return;
        }
        for e in 0..=left {
            cur.push(e);
            rec(n, left - e, cur, out);
            cur.pop();
        }
    }
    let mut all = Vec::new();
    rec(n, d, &mut Vec::new(), &mut all);
    all.into_iter()
        .map(|z| Monomial::new(&z[..n], &z[n..], 0))
        .collect()
}

pub fn monomial_symbol(m: &Monomial, cuts: Cuts) -> PolySymbol<GaussRational> {
    let mut p = PolySymbol::zero(m.n(), cuts);
    p.add_term(m.clone(), real(1));
    p
}

/// Sparse random symbol with small rational coefficients, phase degree
/// `<= max_deg`, `hbar` order `<= max_h`.
pub fn arb_symbol(
    n: usize,
    max_deg: u32,
    max_h: u32,
    cuts: Cuts,
) -> impl proptest::strategy::Strategy<Value = PolySymbol<Rational>> {
    use proptest::prelude::*;
    let basis: Vec<Monomial> = monomials(n, max_deg);
    let len = basis.len();
    proptest::collection::vec((0..len, 0..=max_h, -4i64..=4, 1i64..=3), 1..8).prop_map(
        move |terms| {
            let mut p = PolySymbol::zero(n, cuts);
            for (i, h, a, b) in terms {
                p.add_term(basis[i].with_h(h), Rational::from(a) / Rational::from(b));
            }
            p
        },
    )
}

pub fn to_gauss(p: &PolySymbol<Rational>) -> PolySymbol<GaussRational> {
    p.map_coeffs(GaussRational::from_rational)
}
