//! The star product against operator composition of Weyl quantizations,
//! computed with differential operators `xi_j -> -i hbar d_j`.

mod common;

use common::{monomial_symbol, monomials, weyl, Operator};
use morse_nf::brackets::{moyal_bracket, moyal_star};
use morse_nf::{Cuts, GaussRational, Monomial, PolySymbol, Rational, Scalar};

fn cuts() -> Cuts {
    Cuts::new(8, 4)
}

#[test]
fn weyl_of_x_xi_is_symmetrized() {
    // Op(x xi) = (x xi^ + xi^ x)/2 = x xi^ - i hbar/2
    let p = monomial_symbol(&Monomial::new(&[1], &[1], 0), cuts());
    let mut want = Operator::x_pow(1, 0, 1).compose(&Operator::xi_pow(1, 0, 1));
    let half = GaussRational::from_rational(&(Rational::from(1) / Rational::from(2)));
    let mut shift = Operator::zero(1);
    shift.terms.insert(
        (vec![0], vec![0], 1),
        GaussRational::zero() - GaussRational::i() * half,
    );
    want = want.add(&shift);
    assert_eq!(weyl(&p), want);
}

fn check_all_pairs(n: usize, d: u32) {
    let ms = monomials(n, d);
    let ops: Vec<(PolySymbol<GaussRational>, Operator)> = ms
        .iter()
        .map(|m| {
            let p = monomial_symbol(m, cuts());
            let o = weyl(&p);
            (p, o)
        })
        .collect();
    for (a, oa) in &ops {
        for (b, ob) in &ops {
            let star = moyal_star(a, b).unwrap();
            assert_eq!(
                weyl(&star),
                oa.compose(ob),
                "Op(a)Op(b) != Op(a*b) for a={a:?}, b={b:?}"
            );
        }
    }
}

#[test]
fn star_matches_composition_one_dof() {
    check_all_pairs(1, 4);
}

#[test]
fn star_matches_composition_two_dof() {
    check_all_pairs(2, 4);
}

#[test]
fn moyal_bracket_is_the_commutator_symbol() {
    // Op(hbar {a,b}_M) = i [Op a, Op b]
    let ms = monomials(1, 4);
    let hbar = PolySymbol::<GaussRational>::hbar(1, cuts());
    let i = GaussRational::i();
    for ma in &ms {
        for mb in &ms {
            let (a, b) = (monomial_symbol(ma, cuts()), monomial_symbol(mb, cuts()));
            let lhs = weyl(&(&hbar * &moyal_bracket(&a, &b).unwrap()));
            let (oa, ob) = (weyl(&a), weyl(&b));
            let comm = oa
                .compose(&ob)
                .add(&ob.compose(&oa).scale(&GaussRational::from_i64(-1)));
            assert_eq!(lhs, comm.scale(&i));
        }
    }
}
