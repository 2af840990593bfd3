mod common;

use common::{arb_symbol, to_gauss};
use morse_nf::brackets::{moyal_bracket, moyal_star, poisson};
use morse_nf::homological::solve_homological;
use morse_nf::nf_semiclassical::{semiclassical_normal_form, SemiclassicalOptions};
use morse_nf::symplectic::standard_basis;
use morse_nf::systems::{semiclassical_model_system, small_types};
use morse_nf::{Cuts, PolySymbol, Rational};
use proptest::prelude::*;

type P = PolySymbol<Rational>;

fn wide() -> Cuts {
    Cuts::new(12, 6)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn poisson_jacobi(a in arb_symbol(2, 3, 0, wide()), b in arb_symbol(2, 3, 0, wide()), c in arb_symbol(2, 3, 0, wide())) {
        let t1 = poisson(&a, &poisson(&b, &c).unwrap()).unwrap();
        let t2 = poisson(&b, &poisson(&c, &a).unwrap()).unwrap();
        let t3 = poisson(&c, &poisson(&a, &b).unwrap()).unwrap();
        prop_assert!((&(&t1 + &t2) + &t3).is_zero());
    }

    #[test]
    fn poisson_is_antisymmetric_and_leibniz(a in arb_symbol(2, 3, 1, wide()), b in arb_symbol(2, 3, 1, wide()), c in arb_symbol(1, 3, 1, Cuts::new(12, 6))) {
        prop_assert_eq!(poisson(&a, &b).unwrap(), -&poisson(&b, &a).unwrap());
        let c2 = PolySymbol::from_terms(2, wide(), c.terms().map(|(m, v)| {
            let (x, xi) = m.split();
            (morse_nf::Monomial::new(&[x[0], 0], &[xi[0], 0], m.h()), v.clone())
        }));
        let lhs = poisson(&a, &(&b * &c2)).unwrap();
        let rhs = &(&poisson(&a, &b).unwrap() * &c2) + &(&b * &poisson(&a, &c2).unwrap());
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn star_is_associative_to_hbar4(a in arb_symbol(1, 3, 1, wide()), b in arb_symbol(1, 3, 1, wide()), c in arb_symbol(1, 3, 1, wide())) {
        let (a, b, c) = (to_gauss(&a), to_gauss(&b), to_gauss(&c));
        let l = moyal_star(&moyal_star(&a, &b).unwrap(), &c).unwrap();
        let r = moyal_star(&a, &moyal_star(&b, &c).unwrap()).unwrap();
        let low = |p: &PolySymbol<_>| p.filter(|m| m.h() <= 4);
        prop_assert_eq!(low(&l), low(&r));
    }

    #[test]
    fn moyal_minus_poisson_is_order_hbar2(a in arb_symbol(2, 4, 0, wide()), b in arb_symbol(2, 4, 0, wide())) {
        let d = &moyal_bracket(&a, &b).unwrap() - &poisson(&a, &b).unwrap();
        prop_assert!(d.terms().all(|(m, _)| m.h() >= 2));
    }

    #[test]
    fn moyal_equals_poisson_against_quadratics(a in arb_symbol(2, 5, 2, wide()), t in 0usize..6) {
        let ty = &small_types()[t];
        let n = ty.n();
        let a: P = if n == 2 { a } else {
            PolySymbol::from_terms(1, wide(), a.terms().map(|(m, v)| {
                let (x, xi) = m.split();
                (morse_nf::Monomial::new(&[x[0]], &[xi[0]], m.h()), v.clone())
            }))
        };
        for q in standard_basis::<Rational>(ty, wide()) {
            prop_assert_eq!(moyal_bracket(&a, &q).unwrap(), poisson(&a, &q).unwrap());
        }
    }

    #[test]
    fn homological_residual_vanishes(w in arb_symbol(2, 6, 0, Cuts::new(6, 0)), k in 3u32..=6, t in 2usize..6, c in -3i64..=3) {
        let ty = &small_types()[t];
        let cuts = Cuts::new(k, 0);
        let q = standard_basis::<Rational>(ty, cuts);
        let w = w.with_cuts(cuts).degree_part(k);
        // a commutant element of degree k: q_0^(k/2) when k is even
        let kernel = if k % 2 == 0 { q[0].pow(k / 2).scale_by(&Rational::from(c)) } else { P::zero(2, cuts) };
        let g: Vec<P> = q.iter().enumerate()
            .map(|(i, qi)| {
                let b = poisson(&w, qi).unwrap();
                if i == 1 { &b + &kernel } else { b }
            })
            .collect();
        let sol = solve_homological(&q, &g, k).unwrap();
        for r in &sol.residuals {
            prop_assert!(r.is_zero());
        }
        prop_assert_eq!(&sol.big_f[0], &P::zero(2, cuts));
        prop_assert_eq!(&sol.big_f[1], &kernel);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn first_order_alpha_is_gauge_independent(seed in 1u64..1000, t in 0usize..6, gauge in 0u64..1000) {
        let ty = &small_types()[t];
        let fx = semiclassical_model_system::<Rational>(ty, seed, 3, 1);
        let plain = semiclassical_normal_form(&fx.system, 3, 1, SemiclassicalOptions::default()).unwrap();
        let gauged = semiclassical_normal_form(&fx.system, 3, 1, SemiclassicalOptions {
            kernel_gauge_seed: Some(gauge),
            ..SemiclassicalOptions::default()
        }).unwrap();
        prop_assert!(plain.certificate.ok && gauged.certificate.ok);
        prop_assert_eq!(&plain.alpha[0], &gauged.alpha[0]);
    }
}
