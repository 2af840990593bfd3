//! Exact rationals with an inline fast path.
//!
//! Values whose reduced numerator and denominator fit in `i64` are stored
//! inline and combined in `i128`; anything larger falls back to
//! [`BigRational`]. The representation is canonical (inline whenever it
//! fits, denominator positive, reduced), so derived equality and hashing
//! are value equality.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Rem, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, One, Signed, ToPrimitive, Zero};

#[derive(Clone, PartialEq, Eq, Hash)]
pub enum Rational {
    Small(i64, i64),
    Big(BigRational),
}

fn gcd_u128(mut a: u128, mut b: u128) -> u128 {
    if a == 0 {
        return b;
    }
    if b == 0 {
        return a;
    }
    let shift = (a | b).trailing_zeros();
    a >>= a.trailing_zeros();
    loop {
        b >>= b.trailing_zeros();
        if a > b {
            std::mem::swap(&mut a, &mut b);
        }
        b -= a;
        if b == 0 {
            return a << shift;
        }
    }
}

impl Rational {
    /// `n / d` from `i128` parts (`d != 0`), reduced.
    fn from_i128(n: i128, d: i128) -> Self {
        debug_assert!(d != 0);
        let (n, d) = if d < 0 { (-n, -d) } else { (n, d) };
        let g = gcd_u128(n.unsigned_abs(), d as u128) as i128;
        let (n, d) = if g > 1 { (n / g, d / g) } else { (n, d) };
        match (i64::try_from(n), i64::try_from(d)) {
            (Ok(n), Ok(d)) => Rational::Small(n, d),
            _ => Rational::Big(BigRational::new(BigInt::from(n), BigInt::from(d))),
        }
    }

    /// Canonical form of a big rational.
    pub fn from_big(q: BigRational) -> Self {
        match (q.numer().to_i64(), q.denom().to_i64()) {
            (Some(n), Some(d)) => Rational::Small(n, d),
            _ => Rational::Big(q),
        }
    }

    pub fn to_big(&self) -> BigRational {
        match self {
            Rational::Small(n, d) => BigRational::new_raw(BigInt::from(*n), BigInt::from(*d)),
            Rational::Big(q) => q.clone(),
        }
    }

    pub fn new(n: BigInt, d: BigInt) -> Self {
        Self::from_big(BigRational::new(n, d))
    }

    pub fn from_integer(n: BigInt) -> Self {
        Self::from_big(BigRational::from_integer(n))
    }

    pub fn numer(&self) -> BigInt {
        match self {
            Rational::Small(n, _) => BigInt::from(*n),
            Rational::Big(q) => q.numer().clone(),
        }
    }

    pub fn denom(&self) -> BigInt {
        match self {
            Rational::Small(_, d) => BigInt::from(*d),
            Rational::Big(q) => q.denom().clone(),
        }
    }

    pub fn is_negative(&self) -> bool {
        match self {
            Rational::Small(n, _) => *n < 0,
            Rational::Big(q) => q.is_negative(),
        }
    }

    pub fn is_positive(&self) -> bool {
        match self {
            Rational::Small(n, _) => *n > 0,
            Rational::Big(q) => q.is_positive(),
        }
    }

    pub fn recip(&self) -> Self {
        match self {
            Rational::Small(n, d) => Self::from_i128(*d as i128, *n as i128),
            Rational::Big(q) => Self::from_big(q.recip()),
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Rational::Small(n, d) => *n as f64 / *d as f64,
            Rational::Big(q) => q.to_f64().unwrap_or(f64::NAN),
        }
    }

    fn big_op(&self, o: &Self, f: impl Fn(BigRational, BigRational) -> BigRational) -> Self {
        Self::from_big(f(self.to_big(), o.to_big()))
    }

    fn add_ref(&self, o: &Self) -> Self {
        match (self, o) {
            (Rational::Small(a, b), Rational::Small(c, d)) => {
                let (a, b, c, d) = (*a as i128, *b as i128, *c as i128, *d as i128);
                if b == d {
                    Self::from_i128(a + c, b)
                } else {
                    // |a d + c b| < 2^127 since every factor is below 2^63
                    Self::from_i128(a * d + c * b, b * d)
                }
            }
            _ => self.big_op(o, |x, y| x + y),
        }
    }

    fn mul_ref(&self, o: &Self) -> Self {
        match (self, o) {
            (Rational::Small(a, b), Rational::Small(c, d)) => {
                let (a, b, c, d) = (*a as i128, *b as i128, *c as i128, *d as i128);
                Self::from_i128(a * c, b * d)
            }
            _ => self.big_op(o, |x, y| x * y),
        }
    }

    fn neg_ref(&self) -> Self {
        match self {
            Rational::Small(n, d) => Self::from_i128(-(*n as i128), *d as i128),
            Rational::Big(q) => Self::from_big(-q.clone()),
        }
    }
}

impl From<i64> for Rational {
    fn from(v: i64) -> Self {
        Rational::Small(v, 1)
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rational::Small(n, 1) => write!(f, "{n}"),
            Rational::Small(n, d) => write!(f, "{n}/{d}"),
            Rational::Big(q) => write!(f, "{q}"),
        }
    }
}

impl PartialOrd for Rational {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

impl Ord for Rational {
    fn cmp(&self, o: &Self) -> Ordering {
        match (self, o) {
            (Rational::Small(a, b), Rational::Small(c, d)) => {
                (*a as i128 * *d as i128).cmp(&(*c as i128 * *b as i128))
            }
            _ => self.to_big().cmp(&o.to_big()),
        }
    }
}

macro_rules! forward_ops {
    ($tr:ident, $m:ident, $body:expr) => {
        impl $tr for Rational {
            type Output = Rational;
            fn $m(self, o: Rational) -> Rational {
                $body(&self, &o)
            }
        }
        impl<'a> $tr<&'a Rational> for &'a Rational {
            type Output = Rational;
            fn $m(self, o: &'a Rational) -> Rational {
                $body(self, o)
            }
        }
    };
}

forward_ops!(Add, add, |a: &Rational, b: &Rational| a.add_ref(b));
forward_ops!(Sub, sub, |a: &Rational, b: &Rational| a
    .add_ref(&b.neg_ref()));
forward_ops!(Mul, mul, |a: &Rational, b: &Rational| a.mul_ref(b));
forward_ops!(Div, div, |a: &Rational, b: &Rational| {
    assert!(!b.is_zero(), "division by zero");
    a.mul_ref(&b.recip())
});
forward_ops!(Rem, rem, |a: &Rational, b: &Rational| a
    .big_op(b, |x, y| x % y));

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        self.neg_ref()
    }
}

impl Zero for Rational {
    fn zero() -> Self {
        Rational::Small(0, 1)
    }
    fn is_zero(&self) -> bool {
        matches!(self, Rational::Small(0, _))
    }
}

impl One for Rational {
    fn one() -> Self {
        Rational::Small(1, 1)
    }
}

impl Num for Rational {
    type FromStrRadixErr = <BigRational as Num>::FromStrRadixErr;

    fn from_str_radix(s: &str, radix: u32) -> Result<Self, Self::FromStrRadixErr> {
        BigRational::from_str_radix(s, radix).map(Self::from_big)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn big(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn overflow_promotes_and_demotes() {
        let m = Rational::from_i128(i64::MAX as i128, 1);
        let s = &m + &m;
        assert!(matches!(s, Rational::Big(_)));
        let back = &s - &m;
        assert_eq!(back, m);
        assert!(matches!(back, Rational::Small(..)));
        let neg_min = -Rational::Small(i64::MIN, 1);
        assert_eq!(
            neg_min.to_big(),
            -BigRational::from_integer(BigInt::from(i64::MIN))
        );
    }

    proptest! {
        #[test]
        fn agrees_with_big_rationals(a in any::<i64>(), b in 1i64..i64::MAX, c in any::<i64>(), d in 1i64..i64::MAX) {
            let (x, y) = (Rational::from_big(big(a, b)), Rational::from_big(big(c, d)));
            let (bx, by) = (big(a, b), big(c, d));
            prop_assert_eq!((&x + &y).to_big(), &bx + &by);
            prop_assert_eq!((&x - &y).to_big(), &bx - &by);
            prop_assert_eq!((&x * &y).to_big(), &bx * &by);
            if !y.is_zero() {
                prop_assert_eq!((&x / &y).to_big(), &bx / &by);
            }
            prop_assert_eq!(x.cmp(&y), bx.cmp(&by));
            prop_assert_eq!(Rational::from_big(bx.clone()), x);
        }
    }
}
