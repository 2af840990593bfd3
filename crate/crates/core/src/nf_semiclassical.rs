//! Semiclassical normal form of commuting Weyl symbols:
//! `P_j ~ sum_k Mh_jk * (q_k - alpha_k(hbar))` after conjugation.
//!
//! The principal symbols are put in classical normal form first and the
//! classical generators are applied as Moyal Lie transforms. Each `hbar`
//! level `L` then reads the leftover `R = hbar^L`-coefficient of
//! `P - Mh * (q - alpha)` and removes it with one homological solve:
//!
//! * `N = dF/dq`, `R~ = N^-1 R`, solve `{s, q_k} = -R~_k + K_k`;
//! * `K' = N K`, `K~ = M^-1 K'`, `alpha^(L) = -K~(0)`, and
//!   `K~ - K~(0) = T q` gives the correction `hbar^L M T` to `Mh`;
//! * conjugate by `exp(ad^M_{hbar^L s})`.
//!
//! All work is in real form. Every entry of `Mh` is a polynomial in the
//! `q_j`, and these star-commute, so `Mh * (q - alpha)` is real.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::brackets::{moyal_bracket, moyal_lie_transform, star_parts};
use crate::homological::{check_compatibility, check_compatibility_at, HomologicalSolver};
use crate::linalg::Mat;
use crate::nf_classical::{
    classical_normal_form, first_defect, CertificateReport, ClassicalNF, IntegrableSystem, NfError,
    NfOptions,
};
use crate::poly::{Cuts, PolySymbol};
use crate::qpoly::{qmat_inverse, qmat_mul, qmat_vec, taylor_division, QMat, QMono, QPoly};
use crate::scalar::{RealScalar, Scalar};
use crate::symplectic::FrameField;

/// `alpha^(1) = -M0^-1 r`.
pub fn alpha_first_order<R: Scalar>(m0: &Mat<R>, r: &[R]) -> Result<Vec<R>, NfError> {
    let inv = m0.inverse().ok_or(NfError::SingularM0)?;
    Ok(inv.mul_vec(r).into_iter().map(|v| R::zero() - v).collect())
}

/// The `hbar^1` coefficients of the symbols at the origin.
pub fn subprincipal_at_origin<R: Scalar>(sys: &IntegrableSystem<R>) -> Vec<R> {
    let one = crate::poly::Monomial::one(sys.n).with_h(1);
    sys.symbols.iter().map(|s| s.coeff(&one)).collect()
}

#[derive(Clone, Copy, Debug, Default)]
pub struct SemiclassicalOptions {
    pub nf: NfOptions,
    /// Adds a seeded element of the commutant to every level generator.
    /// Used to probe gauge independence of `alpha`.
    pub kernel_gauge_seed: Option<u64>,
}

#[derive(Clone, Debug)]
pub struct SemiclassicalNF<R> {
    pub base: ClassicalNF<R>,
    /// Graded cuts the computation ran under.
    pub cuts: Cuts,
    pub deg: u32,
    pub h: u32,
    /// `Mh(q, hbar)` with `Mh(0, 0) = M(0)`.
    pub mh: QMat<R>,
    /// `alpha[l-1][k]`: coefficient of `hbar^l` in `alpha_k`.
    pub alpha: Vec<Vec<R>>,
    /// `hbar^L s_L` for `L = 1..h`, applied in order after the classical
    /// generators.
    pub conjugators: Vec<PolySymbol<R>>,
    /// Real symbols and real generators: the conjugations are unitary.
    pub unitary_gauge: bool,
    pub certificate: CertificateReport,
}

impl<R: Scalar> SemiclassicalNF<R> {
    /// `Mh` entries expanded as symbols in `x, xi, hbar`.
    pub fn mh_symbols(&self) -> Vec<Vec<PolySymbol<R>>> {
        let q: Vec<PolySymbol<R>> = self
            .base
            .q
            .iter()
            .map(|qi| qi.with_cuts(self.cuts))
            .collect();
        self.mh
            .iter()
            .map(|row| {
                row.iter()
                    .map(|e| e.with_cuts(self.cuts).expand(&q))
                    .collect()
            })
            .collect()
    }
}

/// Region actually computable from the input: with phase degree up to
/// `D` at `hbar^0`, the slots `degree + 2h <= min(D, weight)` are exact.
pub fn effective_cuts(sys_cuts: Cuts, deg: u32, h: u32) -> Cuts {
    let h = h.min(sys_cuts.h);
    let w = (deg + 2 * h).min(sys_cuts.deg).min(sys_cuts.weight);
    Cuts::graded(w, h)
}

/// `sum_k Mh_jk * (q_k - alpha_k)`, split into real and imaginary parts.
/// Real and imaginary parts of `sum_k Mh_jk * (q_k - alpha_k)`, one per row.
type ModelPairs<R> = Vec<(PolySymbol<R>, PolySymbol<R>)>;

fn model_product<R: Scalar>(
    mh: &[Vec<PolySymbol<R>>],
    q: &[PolySymbol<R>],
    alpha: &[Vec<R>],
    cuts: Cuts,
) -> Result<ModelPairs<R>, NfError> {
    let n = q.len();
    let hb = PolySymbol::<R>::hbar(q[0].n(), cuts);
    let shifted: Vec<PolySymbol<R>> = (0..n)
        .map(|k| {
            let mut p = q[k].with_cuts(cuts);
            for (l, al) in alpha.iter().enumerate() {
                p = &p - &hb.pow(l as u32 + 1).scale_by(&al[k]);
            }
            p
        })
        .collect();
    let mut out = Vec::with_capacity(mh.len());
    for row in mh {
        let mut re = PolySymbol::zero(q[0].n(), cuts);
        let mut im = PolySymbol::zero(q[0].n(), cuts);
        for (m, s) in row.iter().zip(&shifted) {
            let (a, b) = star_parts(&m.with_cuts(cuts), s)?;
            re = &re + &a;
            im = &im + &b;
        }
        out.push((re, im));
    }
    Ok(out)
}

fn centred_quantum<R: Scalar>(
    sys: &IntegrableSystem<R>,
    cuts: Cuts,
) -> Result<Vec<PolySymbol<R>>, NfError> {
    let (c, _) = IntegrableSystem {
        n: sys.n,
        symbols: sys.symbols.iter().map(|s| s.with_cuts(cuts)).collect(),
    }
    .centred()?;
    Ok(c.symbols)
}

fn random_kernel_element<R: Scalar>(nq: usize, cuts: Cuts, rng: &mut ChaCha8Rng) -> QPoly<R> {
    let mut p = QPoly::zero(nq, cuts);
    for j in 0..nq {
        let mut gamma = vec![0; nq];
        gamma[j] = 1;
        p.add_term(
            QMono {
                gamma: gamma.clone(),
                h: 0,
            },
            R::from_ratio(rng.gen_range(-3..=3), rng.gen_range(1..=3)),
        );
        gamma[j] = 2;
        p.add_term(
            QMono { gamma, h: 0 },
            R::from_ratio(rng.gen_range(-3..=3), rng.gen_range(1..=3)),
        );
    }
    p
}

/// Runs the iteration to phase degree `deg` and `hbar` order `h`.
pub fn semiclassical_normal_form<R: FrameField>(
    sys: &IntegrableSystem<R>,
    deg: u32,
    h: u32,
    opts: SemiclassicalOptions,
) -> Result<SemiclassicalNF<R>, NfError> {
    let n = sys.n;
    let cuts = effective_cuts(sys.cuts(), deg, h);
    let w = cuts.weight;
    sys.check_commutation()?;
    let base = classical_normal_form(sys, w, opts.nf)?;

    let q: Vec<PolySymbol<R>> = base.q.iter().map(|qi| qi.with_cuts(cuts)).collect();
    let mut p0: Vec<PolySymbol<R>> = Vec::with_capacity(n);
    // float noise is judged against the input, before cancellations
    let mut scale = 0.0f64;
    for s in centred_quantum(sys, cuts)? {
        let mut t = s.substitute_linear(&base.cartan.s)?;
        scale = scale.max(t.scale());
        for a in &base.generators {
            t = moyal_lie_transform(&t, &a.with_cuts(cuts))?;
        }
        p0.push(t);
    }
    let mut p: Vec<PolySymbol<R>> = p0.iter().map(|pj| pj.chop(scale)).collect();

    let m: QMat<R> = base
        .m
        .iter()
        .map(|row| row.iter().map(|e| e.with_cuts(cuts)).collect())
        .collect();
    let big_n: QMat<R> = base
        .f
        .iter()
        .map(|fi| (0..n).map(|j| fi.with_cuts(cuts).derivative(j)).collect())
        .collect();
    let n_inv = qmat_inverse(&big_n).map_err(|_| NfError::SingularM0)?;
    let m_inv = qmat_inverse(&m).map_err(|_| NfError::SingularM0)?;

    let mut mh = m.clone();
    let mut alpha: Vec<Vec<R>> = Vec::new();
    let mut conjugators = Vec::new();
    let q_cl: Vec<PolySymbol<R>> = base
        .q
        .iter()
        .map(|qi| qi.with_cuts(Cuts::new(w, 0)))
        .collect();
    let mut solver =
        HomologicalSolver::with_base(&q_cl, w, opts.nf.lambda_base.unwrap_or(w as i64 + 1))
            .with_noise_scale(scale);
    let mut rng = opts.kernel_gauge_seed.map(ChaCha8Rng::seed_from_u64);

    for level in 1..=cuts.h {
        let rc = Cuts::new(w - 2 * level, 0);
        let mh_sym: Vec<Vec<PolySymbol<R>>> = mh
            .iter()
            .map(|row| row.iter().map(|e| e.expand(&q)).collect())
            .collect();
        let model = model_product(&mh_sym, &q, &alpha, cuts)?;
        let mut r = Vec::with_capacity(n);
        for (pj, (re, im)) in p.iter().zip(&model) {
            debug_assert!(im.is_negligible(pj.scale().max(1.0)));
            let e = pj - re;
            if let Some((degree, hh)) = first_defect(&e.filter(|mm| mm.h() < level), scale) {
                return Err(NfError::LevelNotCleared {
                    level,
                    degree,
                    h: hh,
                });
            }
            r.push(e.h_coeff(level).with_cuts(rc));
        }
        let qr: Vec<PolySymbol<R>> = q_cl.iter().map(|qi| qi.with_cuts(rc)).collect();
        let r_tilde: Vec<PolySymbol<R>> = n_inv
            .iter()
            .map(|row| {
                let mut acc = PolySymbol::zero(n, rc);
                for (nij, rj) in row.iter().zip(&r) {
                    acc = &acc + &(&nij.with_cuts(rc).expand(&qr) * rj);
                }
                acc.chop(scale)
            })
            .collect();
        if !check_compatibility_at(&r_tilde, &qr, scale) {
            let (i, j) = (0..n)
                .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
                .find(|&(i, j)| {
                    !check_compatibility(
                        &[r_tilde[i].clone(), r_tilde[j].clone()],
                        &[qr[i].clone(), qr[j].clone()],
                    )
                })
                .unwrap_or((0, 0));
            return Err(NfError::CommutationViolated {
                i,
                j,
                degree: 0,
                h: level + 1,
            });
        }
        let sol = solver.solve(&r_tilde)?;
        let kq: Vec<QPoly<R>> = sol
            .big_f
            .iter()
            .map(|k| QPoly::from_symbol_at(&k.chop(scale), &qr, scale).map(|p| p.with_cuts(cuts)))
            .collect::<Result<_, _>>()?;
        let k_tilde = qmat_vec(&m_inv, &qmat_vec(&big_n, &kq));
        let mut t: QMat<R> = Vec::with_capacity(n);
        let mut d_alpha = Vec::with_capacity(n);
        for kt in &k_tilde {
            let (k0, coeffs) = taylor_division(kt);
            d_alpha.push(R::zero() - k0.constant_term());
            t.push(coeffs);
        }
        let dm = qmat_mul(&m, &t);
        for (row, drow) in mh.iter_mut().zip(&dm) {
            for (e, d) in row.iter_mut().zip(drow) {
                *e = e.add(&d.times_h(level));
            }
        }
        alpha.push(d_alpha);

        let mut s = (-&sol.f).with_cuts(cuts);
        if let Some(rng) = rng.as_mut() {
            s = &s + &random_kernel_element::<R>(n, cuts, rng).expand(&q);
        }
        let a = s.times_h(level);
        if !a.is_zero() {
            p = p
                .iter()
                .map(|pj| moyal_lie_transform(pj, &a).map(|t| t.chop(scale)))
                .collect::<Result<_, _>>()?;
        }
        conjugators.push(a);
    }

    let mut nf = SemiclassicalNF {
        base,
        cuts,
        deg,
        h: cuts.h,
        mh,
        alpha,
        conjugators,
        unitary_gauge: true,
        certificate: CertificateReport::success(w, cuts.h),
    };
    nf.certificate = verify_semiclassical_nf(&nf, sys)?;
    Ok(nf)
}

/// Replays `S`, the classical generators and the level conjugators on the
/// original symbols and checks
/// `P_j = sum_k Mh_jk * (q_k - alpha_k)` in every slot of `cuts`, and that
/// every `Mh` entry star-commutes with the `q_j`. Only symbol arithmetic
/// and brackets are used.
#[allow(clippy::too_many_arguments)]
pub fn verify_semiclassical<R: RealScalar>(
    sys: &IntegrableSystem<R>,
    cuts: Cuts,
    s: &Mat<R>,
    q: &[PolySymbol<R>],
    generators: &[PolySymbol<R>],
    conjugators: &[PolySymbol<R>],
    mh: &[Vec<PolySymbol<R>>],
    alpha: &[Vec<R>],
) -> Result<CertificateReport, NfError> {
    let q: Vec<PolySymbol<R>> = q.iter().map(|qi| qi.with_cuts(cuts)).collect();
    let mut report = CertificateReport::success(cuts.weight, cuts.h);
    let scale = sys
        .symbols
        .iter()
        .map(PolySymbol::scale)
        .fold(1.0, f64::max);
    for row in mh {
        for e in row {
            for qk in &q {
                let b = moyal_bracket(&e.with_cuts(cuts), qk)?;
                if let Some(at) = first_defect(&b, scale) {
                    report = report.merge(CertificateReport::failure(
                        cuts.weight,
                        cuts.h,
                        at,
                        "Mh entry outside the commutant",
                    ));
                }
            }
        }
    }
    let mut p = Vec::with_capacity(sys.n);
    for sym in centred_quantum(sys, cuts)? {
        let mut t = sym.substitute_linear(s)?;
        for a in generators.iter().chain(conjugators) {
            t = moyal_lie_transform(&t, &a.with_cuts(cuts))?;
        }
        p.push(t);
    }
    let model = model_product(mh, &q, alpha, cuts)?;
    for (pj, (re, im)) in p.iter().zip(&model) {
        if let Some(at) = first_defect(&(pj - re), scale) {
            report = report.merge(CertificateReport::failure(
                cuts.weight,
                cuts.h,
                at,
                "P != Mh * (q - alpha)",
            ));
        }
        if let Some(at) = first_defect(im, scale) {
            report = report.merge(CertificateReport::failure(
                cuts.weight,
                cuts.h,
                at,
                "Mh * (q - alpha) is not real",
            ));
        }
    }
    Ok(report)
}

pub fn verify_semiclassical_nf<R: RealScalar>(
    nf: &SemiclassicalNF<R>,
    sys: &IntegrableSystem<R>,
) -> Result<CertificateReport, NfError> {
    verify_semiclassical(
        sys,
        nf.cuts,
        &nf.base.cartan.s,
        &nf.base.q,
        &nf.base.generators,
        &nf.conjugators,
        &nf.mh_symbols(),
        &nf.alpha,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;
    use crate::symplectic::CartanType;
    use crate::systems::semiclassical_model_system;

    type P = PolySymbol<Rational>;

    fn r(v: i64) -> Rational {
        Rational::from_i64(v)
    }

    #[test]
    fn alpha_examples() {
        let m = Mat::<Rational>::from_i64(&[&[1]]);
        assert_eq!(alpha_first_order(&m, &[r(5)]).unwrap(), vec![r(-5)]);
        assert_eq!(alpha_first_order(&m, &[r(0)]).unwrap(), vec![r(0)]);
        let m = Mat::<Rational>::from_i64(&[&[2, 0], &[0, 1]]);
        assert_eq!(
            alpha_first_order(&m, &[r(4), r(3)]).unwrap(),
            vec![r(-2), r(-3)]
        );
        let z = Mat::<Rational>::from_i64(&[&[0]]);
        assert_eq!(
            alpha_first_order(&z, &[r(1)]).unwrap_err(),
            NfError::SingularM0
        );
    }

    fn sys(symbols: Vec<P>) -> IntegrableSystem<Rational> {
        IntegrableSystem::new(symbols).unwrap()
    }

    #[test]
    fn hyperbolic_with_constant_subprincipal() {
        let c = Cuts::graded(6, 2);
        let f = &(&P::x(1, c, 0) * &P::xi(1, c, 0)) + &P::hbar(1, c).scale_by(&r(3));
        let nf = semiclassical_normal_form(&sys(vec![f]), 4, 1, SemiclassicalOptions::default())
            .unwrap();
        assert!(nf.certificate.ok, "{:?}", nf.certificate);
        let c0 = nf.base.cartan.c[(0, 0)].clone();
        assert_eq!(nf.alpha[0], vec![r(-3) / c0.clone()]);
        assert_eq!(nf.mh[0][0], QPoly::constant(1, nf.cuts, c0));
        assert!(nf.conjugators.iter().all(PolySymbol::is_zero));
    }

    #[test]
    fn oscillator_is_already_normal() {
        let c = Cuts::graded(6, 2);
        let x = P::x(1, c, 0);
        let xi = P::xi(1, c, 0);
        let f = &(&x * &x) + &(&xi * &xi);
        let nf = semiclassical_normal_form(&sys(vec![f]), 4, 1, SemiclassicalOptions::default())
            .unwrap();
        assert!(nf.certificate.ok);
        assert_eq!(nf.alpha, vec![vec![r(0)]]);
        assert!(nf.base.generators.is_empty());
    }

    #[test]
    fn planted_shift_is_recovered() {
        // (1 + q) * (q - hbar/2), then a Moyal Lie transform
        let c = Cuts::graded(8, 2);
        let q = &P::x(1, c, 0) * &P::xi(1, c, 0);
        let one_q = &P::constant(1, c, r(1)) + &q;
        let shifted = &q - &P::hbar(1, c).scale_by(&Rational::from_ratio(1, 2));
        let (prod, im) = star_parts(&one_q, &shifted).unwrap();
        assert!(im.is_zero());
        let gen = &P::x(1, c, 0).pow(3) + &(&P::xi(1, c, 0) * &P::hbar(1, c));
        let f = moyal_lie_transform(&prod, &gen).unwrap();
        let nf = semiclassical_normal_form(&sys(vec![f]), 4, 2, SemiclassicalOptions::default())
            .unwrap();
        assert!(nf.certificate.ok, "{:?}", nf.certificate);
        assert_eq!(nf.base.cartan.c[(0, 0)], r(1));
        assert_eq!(nf.alpha[0], vec![Rational::from_ratio(1, 2)]);
        let qq = QPoly::var(1, nf.cuts, 0);
        assert_eq!(
            nf.mh[0][0].h_coeff(0),
            QPoly::constant(1, nf.cuts, r(1)).add(&qq).h_coeff(0)
        );
    }

    #[test]
    fn fixtures_recover_first_order_alpha() {
        for ty in [
            CartanType::new(0, 1, 0),
            CartanType::new(1, 0, 0),
            CartanType::new(0, 1, 0),
        ] {
            let m = semiclassical_model_system::<Rational>(&ty, 7, 4, 2);
            let nf = semiclassical_normal_form(&m.system, 4, 2, SemiclassicalOptions::default())
                .unwrap();
            assert!(nf.certificate.ok, "{:?}", nf.certificate);
            let want =
                alpha_first_order(&nf.base.cartan.c, &subprincipal_at_origin(&m.system)).unwrap();
            assert_eq!(nf.alpha[0], want);
        }
    }

    #[test]
    fn tampering_is_localized() {
        let ty = CartanType::new(0, 1, 0);
        let m = semiclassical_model_system::<Rational>(&ty, 3, 4, 2);
        let nf =
            semiclassical_normal_form(&m.system, 4, 2, SemiclassicalOptions::default()).unwrap();
        let mh = nf.mh_symbols();
        let run = |mh: &[Vec<P>], alpha: &[Vec<Rational>]| {
            verify_semiclassical(
                &m.system,
                nf.cuts,
                &nf.base.cartan.s,
                &nf.base.q,
                &nf.base.generators,
                &nf.conjugators,
                mh,
                alpha,
            )
            .unwrap()
        };
        assert!(run(&mh, &nf.alpha).ok);
        let mut alpha = nf.alpha.clone();
        alpha[1][0] = alpha[1][0].clone() + r(1);
        let rep = run(&mh, &alpha);
        assert_eq!(rep.first_failure, Some((0, 2)));
        let mut bad = mh.clone();
        bad[0][0] = &bad[0][0] + &P::x(1, nf.cuts, 0).pow(2);
        let rep = run(&bad, &nf.alpha);
        assert!(!rep.ok);
        assert_eq!(
            rep.reason.as_deref(),
            Some("Mh entry outside the commutant")
        );
    }
}
