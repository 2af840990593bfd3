//! Poisson bracket, Moyal product and bracket, Lie transforms.
//!
//! All three products come from the one bidifferential kernel
//! `K_k(a, b) = (1/k!) a D^k b` with
//! `D = <-d_xi . ->d_x - <-d_x . ->d_xi`:
//!
//! * `{a, b} = K_1(a, b)`,
//! * `a * b = sum_k (-i hbar / 2)^k K_k(a, b)`,
//! * `{a, b}_M = (i/hbar)(a*b - b*a) = sum_{k odd} (-1)^((k-1)/2) (hbar/2)^(k-1) K_k(a, b)`.
//!
//! With these signs `[x, xi]_* = i hbar`, which is what Weyl quantization
//! of `x` and `(hbar/i) d_x` gives.

mod lie;

pub use lie::{lie_transform, moyal_lie_transform, star_conjugate, star_inverse};

use crate::poly::{Accumulator, Monomial, PolyError, PolySymbol};
use crate::scalar::{ComplexScalar, Rational, Scalar};
use num_bigint::BigInt;

/// The bracket convention every routine in the crate uses.
pub const CONVENTION: &str = "{f,g} = sum_j d(xi_j)f d(x_j)g - d(x_j)f d(xi_j)g";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BracketError {
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error("generator has a term of degree {degree} at hbar^{h}; weight must be at least 3")]
    LowOrderGenerator { degree: u32, h: u32 },
    #[error("hbar cut {cut} is below the conjugation level {level}")]
    CutBelowLevel { cut: u32, level: u32 },
    #[error("level must be at least 1")]
    ZeroLevel,
}

fn binom(n: u32, k: u32) -> i128 {
    let mut r: i128 = 1;
    for i in 0..k {
        r = r * (n - i) as i128 / (i + 1) as i128;
    }
    r
}

fn falling(n: u32, k: u32) -> i128 {
    (0..k).map(|i| (n - i) as i128).product()
}

fn int_scalar<C: Scalar>(v: i128) -> C {
    match i64::try_from(v) {
        Ok(v) => C::from_i64(v),
        Err(_) => C::from_rational(&Rational::from_integer(BigInt::from(v))),
    }
}

/// Slot options: for each of the `2n` contraction slots, the admissible
/// orders `t` with their integer weight.
fn slot_options(ma: &Monomial, mb: &Monomial, kmax: u32) -> Vec<Vec<(u32, i128)>> {
    let n = ma.n();
    let mut slots = Vec::with_capacity(2 * n);
    for j in 0..n {
        // xi_j of a against x_j of b
        let (bj, cj) = (ma.exp(n + j), mb.exp(j));
        slots.push(
            (0..=bj.min(cj).min(kmax))
                .map(|t| (t, binom(bj, t) * falling(cj, t)))
                .collect(),
        );
    }
    for j in 0..n {
        // x_j of a against xi_j of b, with a minus sign per order
        let (aj, dj) = (ma.exp(j), mb.exp(n + j));
        slots.push(
            (0..=aj.min(dj).min(kmax))
                .map(|t| {
                    let s = if t % 2 == 0 { 1 } else { -1 };
                    (t, s * binom(aj, t) * falling(dj, t))
                })
                .collect(),
        );
    }
    slots
}

/// `sum_k w_k hbar^(s_k) K_k(a, b)` where `weights[k] = Some((w_k, s_k))`.
pub(crate) fn bidiff<C: Scalar>(
    a: &PolySymbol<C>,
    b: &PolySymbol<C>,
    weights: &[Option<(C, u32)>],
) -> Result<PolySymbol<C>, PolyError> {
    if a.n() != b.n() {
        return Err(PolyError::DimensionMismatch {
            left: a.n(),
            right: b.n(),
        });
    }
    let n = a.n();
    let cuts = a.cuts().min(&b.cuts());
    let kmax = weights.len().saturating_sub(1) as u32;
    // the largest weight drop any contraction can cause is 2 (k - s_k)
    let drop = weights
        .iter()
        .enumerate()
        .filter_map(|(k, w)| w.as_ref().map(|(_, s)| 2 * (k as i64 - *s as i64)))
        .max()
        .unwrap_or(0);
    let mut bt: Vec<(&Monomial, &C, i64)> =
        b.terms().map(|(m, c)| (m, c, m.weight() as i64)).collect();
    bt.sort_by_key(|t| t.2);
    let mut out = Accumulator::new(n, cuts);
    let mut picks = vec![0u32; 2 * n];
    for (ma, ca) in a.terms() {
        let limit = cuts.weight as i64 + drop - ma.weight() as i64;
        for &(mb, cb, wb) in &bt {
            if wb > limit {
                break;
            }
            let d = ma.degree() + mb.degree();
            let h0 = ma.h() + mb.h();
            // cheapest contraction must still fit the cuts
            let fits = (0..=kmax.min(d / 2)).any(|k| {
                weights[k as usize].as_ref().is_some_and(|(_, s)| {
                    let dk = d - 2 * k;
                    let hk = h0 + s;
                    hk <= cuts.h && dk <= cuts.deg && dk + 2 * hk <= cuts.weight
                })
            });
            if !fits {
                continue;
            }
            let slots = slot_options(ma, mb, kmax);
            let prod = ca.clone() * cb.clone();
            enumerate(
                &slots,
                kmax,
                0,
                0,
                1,
                &mut picks,
                &mut |k, factor, picks| {
                    let Some((w, s)) = &weights[k as usize] else {
                        return;
                    };
                    let mut z: Vec<u32> = ma
                        .exps()
                        .iter()
                        .zip(mb.exps())
                        .map(|(x, y)| *x as u32 + *y as u32)
                        .collect();
                    for j in 0..n {
                        let t = picks[j] + picks[n + j];
                        z[j] -= t;
                        z[n + j] -= t;
                    }
                    let m = Monomial::from_exponents(&z, h0 + s);
                    if !cuts.admits(&m) {
                        return;
                    }
                    out.add(m, prod.clone() * w.clone() * int_scalar(factor));
                },
            );
        }
    }
    Ok(out.finish())
}

fn enumerate(
    slots: &[Vec<(u32, i128)>],
    kmax: u32,
    idx: usize,
    k: u32,
    factor: i128,
    picks: &mut Vec<u32>,
    leaf: &mut impl FnMut(u32, i128, &[u32]),
) {
    if idx == slots.len() {
        leaf(k, factor, picks);
        return;
    }
    for &(t, f) in &slots[idx] {
        if k + t > kmax {
            break;
        }
        picks[idx] = t;
        let nf = factor.checked_mul(f).expect("contraction factor overflow");
        enumerate(slots, kmax, idx + 1, k + t, nf, picks, leaf);
    }
    picks[idx] = 0;
}

/// Poisson bracket `{a, b}`.
pub fn poisson<C: Scalar>(
    a: &PolySymbol<C>,
    b: &PolySymbol<C>,
) -> Result<PolySymbol<C>, PolyError> {
    bidiff(a, b, &[None, Some((C::one(), 0))])
}

fn kmax_for<C: Scalar>(a: &PolySymbol<C>, b: &PolySymbol<C>) -> u32 {
    let da = a.max_degree().unwrap_or(0);
    let db = b.max_degree().unwrap_or(0);
    da.min(db)
}

/// Weyl (Moyal) star product over a complex field.
pub fn moyal_star<Z: ComplexScalar>(
    a: &PolySymbol<Z>,
    b: &PolySymbol<Z>,
) -> Result<PolySymbol<Z>, PolyError> {
    let kmax = kmax_for(a, b);
    let step = Z::new(Z::Real::zero(), Z::Real::from_ratio(-1, 2));
    let weights: Vec<Option<(Z, u32)>> = (0..=kmax).map(|k| Some((step.pow(k), k))).collect();
    bidiff(a, b, &weights)
}

/// Coefficient of `hbar^(k-1) K_k` in the Moyal bracket.
fn moyal_weight<C: Scalar>(k: u32) -> Option<(C, u32)> {
    if k.is_multiple_of(2) {
        return None;
    }
    let sign = if (k / 2).is_multiple_of(2) { 1 } else { -1 };
    let two = C::from_i64(2);
    Some((C::from_i64(sign) / two.pow(k - 1), k - 1))
}

/// Moyal bracket `(i/hbar)(a*b - b*a)`, computed in real form.
pub fn moyal_bracket<C: Scalar>(
    a: &PolySymbol<C>,
    b: &PolySymbol<C>,
) -> Result<PolySymbol<C>, PolyError> {
    let kmax = kmax_for(a, b);
    let weights: Vec<Option<(C, u32)>> = (0..=kmax).map(moyal_weight).collect();
    bidiff(a, b, &weights)
}

/// Real and imaginary parts of `a * b` for real `a`, `b`: the even and odd
/// terms of the star series.
pub fn star_parts<C: Scalar>(
    a: &PolySymbol<C>,
    b: &PolySymbol<C>,
) -> Result<(PolySymbol<C>, PolySymbol<C>), PolyError> {
    let kmax = kmax_for(a, b);
    // (-i/2)^k: real (-1)^(k/2) / 2^k for even k, -i (-1)^((k-1)/2) / 2^k for odd k
    let part = |odd: bool| -> Vec<Option<(C, u32)>> {
        (0..=kmax)
            .map(|k| {
                if (k % 2 == 1) != odd {
                    return None;
                }
                let sign = if (k / 2) % 2 == 0 { 1 } else { -1 };
                let sign = if odd { -sign } else { sign };
                Some((C::from_i64(sign) / C::from_i64(2).pow(k), k))
            })
            .collect()
    };
    Ok((bidiff(a, b, &part(false))?, bidiff(a, b, &part(true))?))
}
