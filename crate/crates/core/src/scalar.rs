//! Coefficient fields.
//!
//! Every symbol, matrix and solver in the crate is generic over [`Scalar`].
//! Exact work uses [`Rational`] (arbitrary precision) and, where the
//! imaginary unit shows up, [`GaussRational`]. Float work uses `f64` and
//! [`Complex64`]. Exact types compare against zero exactly; float types use a
//! scale-relative threshold through [`Scalar::negligible`].

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_complex::Complex;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub use crate::rat::Rational;
pub type GaussRational = Complex<Rational>;
pub use num_complex::Complex64;

/// Relative threshold under which a float quantity counts as zero.
pub const FLOAT_ZERO_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoeffKind {
    Rational,
    Float,
    GaussRational,
    Complex,
}

impl CoeffKind {
    pub fn is_exact(self) -> bool {
        matches!(self, CoeffKind::Rational | CoeffKind::GaussRational)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ScalarParseError {
    #[error("cannot parse coefficient {0}")]
    Invalid(String),
    #[error("zero denominator in {0}")]
    ZeroDenominator(String),
}

pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    const KIND: CoeffKind;

    fn zero() -> Self;
    fn one() -> Self;
    /// Exact zero test (for floats: `== 0.0`).
    fn is_zero(&self) -> bool;
    fn from_i64(v: i64) -> Self;
    fn from_rational(q: &Rational) -> Self;
    /// Modulus as an `f64`, used for pivot selection and tolerances.
    fn magnitude(&self) -> f64;
    fn to_json(&self) -> Value;
    fn from_json(v: &Value) -> Result<Self, ScalarParseError>;

    fn from_ratio(n: i64, d: i64) -> Self {
        Self::from_rational(&(Rational::from(n) / Rational::from(d)))
    }

    fn is_exact() -> bool {
        Self::KIND.is_exact()
    }

    /// Zero for exact types; `|x| <= FLOAT_ZERO_TOL * max(scale, 1)` for floats.
    fn negligible(&self, scale: f64) -> bool {
        if Self::is_exact() {
            self.is_zero()
        } else {
            self.magnitude() <= FLOAT_ZERO_TOL * scale.max(1.0)
        }
    }

    fn is_one(&self) -> bool {
        *self == Self::one()
    }

    fn pow(&self, e: u32) -> Self {
        let mut acc = Self::one();
        for _ in 0..e {
            acc = acc * self.clone();
        }
        acc
    }
}

/// Real fields: ordered, with a complexification.
pub trait RealScalar: Scalar + PartialOrd {
    type Cplx: ComplexScalar<Real = Self>;

    fn to_f64(&self) -> f64;
    /// Square root when it exists in the field (always for floats,
    /// perfect squares for rationals).
    fn sqrt_checked(&self) -> Option<Self>;

    fn abs(&self) -> Self {
        if *self < Self::zero() {
            -self.clone()
        } else {
            self.clone()
        }
    }

    fn complexify(&self) -> Self::Cplx {
        Self::Cplx::new(self.clone(), Self::zero())
    }
}

/// Complex fields over a real field.
pub trait ComplexScalar: Scalar {
    type Real: RealScalar<Cplx = Self>;

    fn new(re: Self::Real, im: Self::Real) -> Self;
    fn re(&self) -> Self::Real;
    fn im(&self) -> Self::Real;

    fn i() -> Self {
        Self::new(Self::Real::zero(), Self::Real::one())
    }

    fn conj(&self) -> Self {
        Self::new(self.re(), -self.im())
    }

    fn norm_sqr(&self) -> Self::Real {
        self.re() * self.re() + self.im() * self.im()
    }

    /// A scalar `s` with `|s|^2 = 1/target`, if one exists in the field.
    fn unit_scale_for(target: &Self::Real) -> Option<Self>;
}

pub fn rational_to_string(q: &Rational) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

pub fn parse_rational(s: &str) -> Result<Rational, ScalarParseError> {
    let s = s.trim();
    let bad = || ScalarParseError::Invalid(s.to_string());
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().map_err(|_| bad())?;
            let d: BigInt = d.trim().parse().map_err(|_| bad())?;
            if d.is_zero() {
                return Err(ScalarParseError::ZeroDenominator(s.to_string()));
            }
            Ok(Rational::new(n, d))
        }
        None => {
            if let Ok(n) = s.parse::<BigInt>() {
                return Ok(Rational::from_integer(n));
            }
            // Decimal literal such as "0.25": exact decimal expansion.
            let (int, frac) = s.split_once('.').ok_or_else(bad)?;
            if frac.is_empty() || !frac.chars().all(|c| c.is_ascii_digit()) {
                return Err(bad());
            }
            let digits: BigInt = format!("{int}{frac}").parse().map_err(|_| bad())?;
            let den = num_traits::pow(BigInt::from(10), frac.len());
            Ok(Rational::new(digits, den))
        }
    }
}

/// Best rational approximation with denominator at most `max_den`
/// (continued fractions).
pub fn rationalize(x: f64, max_den: i64) -> Option<Rational> {
    if !x.is_finite() {
        return None;
    }
    let (mut p0, mut q0, mut p1, mut q1) = (0i128, 1i128, 1i128, 0i128);
    let mut r = x;
    for _ in 0..64 {
        let a = r.floor();
        if a.abs() > 1e15 {
            break;
        }
        let ai = a as i128;
        let p2 = ai * p1 + p0;
        let q2 = ai * q1 + q0;
        if q2 > max_den as i128 {
            break;
        }
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
        let frac = r - a;
        if frac.abs() < 1e-15 {
            break;
        }
        r = 1.0 / frac;
    }
    if q1 == 0 {
        return None;
    }
    Some(Rational::new(BigInt::from(p1), BigInt::from(q1)))
}

impl Scalar for Rational {
    const KIND: CoeffKind = CoeffKind::Rational;

    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn from_i64(v: i64) -> Self {
        Rational::from(v)
    }
    fn from_rational(q: &Rational) -> Self {
        q.clone()
    }
    fn magnitude(&self) -> f64 {
        Rational::to_f64(self).abs()
    }
    fn to_json(&self) -> Value {
        Value::String(rational_to_string(self))
    }
    fn from_json(v: &Value) -> Result<Self, ScalarParseError> {
        match v {
            Value::String(s) => parse_rational(s),
            Value::Number(n) if n.is_i64() => Ok(Self::from_i64(n.as_i64().unwrap())),
            other => Err(ScalarParseError::Invalid(other.to_string())),
        }
    }
}

impl RealScalar for Rational {
    type Cplx = GaussRational;

    fn to_f64(&self) -> f64 {
        Rational::to_f64(self)
    }
    fn sqrt_checked(&self) -> Option<Self> {
        if self.is_negative() {
            return None;
        }
        let (num, den) = (self.numer(), self.denom());
        let n = num.sqrt();
        let d = den.sqrt();
        (&n * &n == num && &d * &d == den).then(|| Rational::new(n, d))
    }
}

impl Scalar for f64 {
    const KIND: CoeffKind = CoeffKind::Float;

    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn from_i64(v: i64) -> Self {
        v as f64
    }
    fn from_rational(q: &Rational) -> Self {
        q.to_f64()
    }
    fn magnitude(&self) -> f64 {
        f64::abs(*self)
    }
    fn to_json(&self) -> Value {
        serde_json::Number::from_f64(*self)
            .map(Value::Number)
            .unwrap_or(Value::Null)
    }
    fn from_json(v: &Value) -> Result<Self, ScalarParseError> {
        match v {
            Value::Number(n) => n
                .as_f64()
                .ok_or_else(|| ScalarParseError::Invalid(n.to_string())),
            Value::String(s) => {
                if let Ok(x) = s.trim().parse::<f64>() {
                    Ok(x)
                } else {
                    Ok(Self::from_rational(&parse_rational(s)?))
                }
            }
            other => Err(ScalarParseError::Invalid(other.to_string())),
        }
    }
}

impl RealScalar for f64 {
    type Cplx = Complex64;

    fn to_f64(&self) -> f64 {
        *self
    }
    fn sqrt_checked(&self) -> Option<Self> {
        (*self >= 0.0).then(|| self.sqrt())
    }
}

fn complex_to_json<T: Scalar>(re: &T, im: &T) -> Value {
    serde_json::json!({ "re": re.to_json(), "im": im.to_json() })
}

fn complex_from_json<T: Scalar>(v: &Value) -> Result<(T, T), ScalarParseError> {
    match v {
        Value::Object(map) => {
            let re = map
                .get("re")
                .map(T::from_json)
                .transpose()?
                .unwrap_or_else(T::zero);
            let im = map
                .get("im")
                .map(T::from_json)
                .transpose()?
                .unwrap_or_else(T::zero);
            Ok((re, im))
        }
        other => Ok((T::from_json(other)?, T::zero())),
    }
}

impl Scalar for GaussRational {
    const KIND: CoeffKind = CoeffKind::GaussRational;

    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn from_i64(v: i64) -> Self {
        Complex::new(Rational::from_i64(v), Zero::zero())
    }
    fn from_rational(q: &Rational) -> Self {
        Complex::new(q.clone(), Zero::zero())
    }
    fn magnitude(&self) -> f64 {
        let r = RealScalar::to_f64(&self.re);
        let i = RealScalar::to_f64(&self.im);
        r.hypot(i)
    }
    fn to_json(&self) -> Value {
        complex_to_json(&self.re, &self.im)
    }
    fn from_json(v: &Value) -> Result<Self, ScalarParseError> {
        let (re, im) = complex_from_json::<Rational>(v)?;
        Ok(Complex::new(re, im))
    }
}

impl ComplexScalar for GaussRational {
    type Real = Rational;

    fn new(re: Rational, im: Rational) -> Self {
        Complex::new(re, im)
    }
    fn re(&self) -> Rational {
        self.re.clone()
    }
    fn im(&self) -> Rational {
        self.im.clone()
    }
    fn unit_scale_for(target: &Rational) -> Option<Self> {
        // Need a^2 + b^2 = 1/target with a, b rational: write
        // 1/target = p/q = (p q)/q^2 and split p q into two squares.
        if !target.is_positive() {
            return None;
        }
        let inv = target.recip();
        let p = inv.numer();
        let q = inv.denom();
        let m = (&p * &q).to_u128()?;
        let (a, b) = two_squares(m)?;
        let qd = Rational::from_integer(q);
        Some(Complex::new(
            Rational::from_integer(BigInt::from(a)) / qd.clone(),
            Rational::from_integer(BigInt::from(b)) / qd,
        ))
    }
}

/// Search bound for [`two_squares`].
const TWO_SQUARES_LIMIT: u128 = 1 << 44;

/// Write `m = a^2 + b^2` by direct search (bounded).
pub fn two_squares(m: u128) -> Option<(u128, u128)> {
    if m > TWO_SQUARES_LIMIT {
        return None;
    }
    let isqrt = |v: u128| -> u128 {
        let mut r = (v as f64).sqrt() as u128;
        while r * r > v {
            r -= 1;
        }
        while (r + 1) * (r + 1) <= v {
            r += 1;
        }
        r
    };
    let top = isqrt(m);
    let mut a = top;
    loop {
        let rest = m - a * a;
        let b = isqrt(rest);
        if b * b == rest {
            return Some((a, b));
        }
        if a == 0 || a * a < m / 2 {
            return None;
        }
        a -= 1;
    }
}

impl Scalar for Complex64 {
    const KIND: CoeffKind = CoeffKind::Complex;

    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }
    fn is_zero(&self) -> bool {
        self.re == 0.0 && self.im == 0.0
    }
    fn from_i64(v: i64) -> Self {
        Complex64::new(v as f64, 0.0)
    }
    fn from_rational(q: &Rational) -> Self {
        Complex64::new(f64::from_rational(q), 0.0)
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
    fn to_json(&self) -> Value {
        complex_to_json(&self.re, &self.im)
    }
    fn from_json(v: &Value) -> Result<Self, ScalarParseError> {
        let (re, im) = complex_from_json::<f64>(v)?;
        Ok(Complex64::new(re, im))
    }
}

impl ComplexScalar for Complex64 {
    type Real = f64;

    fn new(re: f64, im: f64) -> Self {
        Complex64::new(re, im)
    }
    fn re(&self) -> f64 {
        self.re
    }
    fn im(&self) -> f64 {
        self.im
    }
    fn unit_scale_for(target: &f64) -> Option<Self> {
        (*target > 0.0).then(|| Complex64::new(1.0 / target.sqrt(), 0.0))
    }
}
