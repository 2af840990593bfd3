use super::{moyal_bracket, moyal_star, poisson, BracketError};
use crate::poly::{Cuts, PolyError, PolySymbol};
use crate::scalar::{ComplexScalar, Scalar};

fn exp_ad<C: Scalar>(
    f: &PolySymbol<C>,
    a: &PolySymbol<C>,
    bracket: impl Fn(&PolySymbol<C>, &PolySymbol<C>) -> Result<PolySymbol<C>, PolyError>,
) -> Result<PolySymbol<C>, PolyError> {
    let mut acc = f.clone();
    let mut term = f.clone();
    let mut m = 1i64;
    loop {
        term = bracket(a, &term)?.scale_by(&C::from_ratio(1, m));
        if term.is_zero() {
            return Ok(acc);
        }
        acc = acc.checked_add(&term)?;
        m += 1;
    }
}

/// `exp(ad_a) f = f + {a, f} + {a, {a, f}}/2 + ..`, truncated at phase
/// degree `n_deg`. Every term of `a` must have degree at least 3.
pub fn lie_transform<C: Scalar>(
    f: &PolySymbol<C>,
    a: &PolySymbol<C>,
    n_deg: u32,
) -> Result<PolySymbol<C>, BracketError> {
    if let Some((m, _)) = a.terms().find(|(m, _)| m.degree() < 3) {
        return Err(BracketError::LowOrderGenerator {
            degree: m.degree(),
            h: m.h(),
        });
    }
    let mut cuts = f.cuts();
    cuts.deg = cuts.deg.min(n_deg);
    cuts.weight = cuts.weight.min(cuts.deg + 2 * cuts.h);
    Ok(exp_ad(&f.with_cuts(cuts), a, poisson)?)
}

/// `exp(ad^M_a) f` with the Moyal bracket. Every term of `a` must have
/// weight `degree + 2 * h_power` at least 3, so each application raises the
/// weight and the series stops at the cuts.
pub fn moyal_lie_transform<C: Scalar>(
    f: &PolySymbol<C>,
    a: &PolySymbol<C>,
) -> Result<PolySymbol<C>, BracketError> {
    if let Some((m, _)) = a.terms().find(|(m, _)| m.weight() < 3) {
        return Err(BracketError::LowOrderGenerator {
            degree: m.degree(),
            h: m.h(),
        });
    }
    Ok(exp_ad(f, a, moyal_bracket)?)
}

/// Star inverse of `g = 1 + e` where every term of `e` carries `hbar`.
pub fn star_inverse<Z: ComplexScalar>(g: &PolySymbol<Z>) -> Result<PolySymbol<Z>, BracketError> {
    let cuts = g.cuts();
    let one = PolySymbol::constant(g.n(), cuts, Z::one());
    let e = g.checked_sub(&one)?;
    if e.min_h() == Some(0) {
        return Err(BracketError::ZeroLevel);
    }
    let minus_e = -&e;
    let mut acc = one.clone();
    let mut power = one;
    loop {
        power = moyal_star(&power, &minus_e)?;
        if power.is_zero() {
            return Ok(acc);
        }
        acc = acc.checked_add(&power)?;
    }
}

/// Symbol of `(1 + i hbar^level C)^(-1) P (1 + i hbar^level C)`, with the
/// inverse expanded as a star-geometric series and everything cut at
/// `hbar^n_h`. To leading order this is `p + hbar^(level+1) {p, c}_M`.
pub fn star_conjugate<Z: ComplexScalar>(
    p: &PolySymbol<Z>,
    c: &PolySymbol<Z>,
    level: u32,
    n_h: u32,
) -> Result<PolySymbol<Z>, BracketError> {
    if level == 0 {
        return Err(BracketError::ZeroLevel);
    }
    if n_h < level {
        return Err(BracketError::CutBelowLevel { cut: n_h, level });
    }
    let pc = p.cuts();
    let cuts = pc.min(&Cuts {
        deg: pc.deg,
        h: n_h,
        weight: pc.weight,
    });
    let p = p.with_cuts(cuts);
    let g = PolySymbol::constant(p.n(), cuts, Z::one())
        .checked_add(&c.with_cuts(cuts).times_h(level).scale_by(&Z::i()))?;
    let ginv = star_inverse(&g)?;
    Ok(moyal_star(&moyal_star(&ginv, &p)?, &g)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::Monomial;
    use crate::scalar::{GaussRational, Rational};

    type P = PolySymbol<Rational>;

    fn r(n: i64) -> Rational {
        Rational::from_i64(n)
    }

    #[test]
    fn zero_generator_is_identity() {
        let c = Cuts::new(6, 0);
        let f = &P::x(1, c, 0) * &P::xi(1, c, 0);
        assert_eq!(lie_transform(&f, &P::zero(1, c), 6).unwrap(), f);
    }

    #[test]
    fn commuting_generator_is_identity() {
        let c = Cuts::new(8, 0);
        let q = &P::x(2, c, 0) * &P::xi(2, c, 0);
        let a = &q * &P::x(2, c, 1);
        assert_eq!(lie_transform(&q, &a, 8).unwrap(), q);
    }

    #[test]
    fn first_order_term() {
        let c = Cuts::new(4, 0);
        let f = &P::x(1, c, 0) * &P::xi(1, c, 0);
        let a = P::monomial(1, c, Monomial::new(&[2], &[1], 0), r(1));
        let out = lie_transform(&f, &a, 4).unwrap();
        // degree 3 part of exp(ad_a) f is {a, f} = -x^2 xi
        assert_eq!(out.degree_part(3), a.scale_by(&r(-1)));
        assert_eq!(out.degree_part(2), f);
    }

    #[test]
    fn low_order_generator_rejected() {
        let c = Cuts::new(4, 0);
        let f = P::x(1, c, 0);
        let a = &P::x(1, c, 0) * &P::x(1, c, 0);
        assert!(matches!(
            lie_transform(&f, &a, 4),
            Err(BracketError::LowOrderGenerator { degree: 2, h: 0 })
        ));
    }

    #[test]
    fn star_conjugate_trivial_cases() {
        let c = Cuts::new(6, 3);
        let p = (&P::x(1, c, 0) * &P::xi(1, c, 0)).complexify();
        let zero = PolySymbol::<GaussRational>::zero(1, c);
        assert_eq!(star_conjugate(&p, &zero, 1, 3).unwrap(), p);
        let k = P::constant(1, c, r(5)).complexify();
        let cc = P::x(1, c, 0).pow(3).complexify();
        assert_eq!(star_conjugate(&k, &cc, 1, 3).unwrap(), k);
        assert!(matches!(
            star_conjugate(&p, &cc, 2, 1),
            Err(BracketError::CutBelowLevel { cut: 1, level: 2 })
        ));
    }

    #[test]
    fn star_conjugate_leading_correction() {
        let c = Cuts::new(6, 2);
        let p = &P::x(1, c, 0) * &P::xi(1, c, 0);
        let cc = &P::x(1, c, 0).pow(3) + &P::xi(1, c, 0).pow(2);
        let out = star_conjugate(&p.complexify(), &cc.complexify(), 1, 2).unwrap();
        assert!(out.im().is_zero());
        let expect = &p + &moyal_bracket(&p, &cc).unwrap().times_h(2);
        assert_eq!(out.re(), expect);
    }
}
