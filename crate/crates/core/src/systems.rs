//! Test systems: the C. Neumann problem near its fixed points, and seeded
//! round-trip fixtures built from the standard models.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::brackets::{lie_transform, moyal_lie_transform, star_parts};
use crate::linalg::Mat;
use crate::nf_classical::IntegrableSystem;
use crate::poly::{phase_basis, Cuts, PolySymbol};
use crate::scalar::{rationalize, RealScalar, Scalar};
use crate::symplectic::{
    hessian_at, random_symplectic, standard_basis, williamson_classify, CartanType, FrameField,
    QuadraticForm, SymplecticError, WilliamsonOptions,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SystemsError {
    #[error("eigenvalues must be distinct (got {0} twice)")]
    RepeatedEigenvalue(f64),
    #[error("eigenvalues must be positive")]
    NonPositive,
    #[error("fixed point {index} out of range for {count} eigenvalues")]
    FixedPointOutOfRange { index: usize, count: usize },
    #[error("need at least two eigenvalues")]
    TooSmall,
    #[error(transparent)]
    Symplectic(#[from] SymplecticError),
}

/// Denominator bound of the nonresonance heuristic.
pub const RESONANCE_DEN: i64 = 50;

fn default_neumann_deg() -> u32 {
    4
}

/// `A = diag(eigenvalues)` on `R^(n+1)` and the fixed point `p_i = e_i`
/// (index after sorting).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NeumannSpec {
    pub eigenvalues: Vec<f64>,
    #[serde(rename = "fixed_point")]
    pub chart_center: usize,
    #[serde(default = "default_neumann_deg")]
    pub deg_cut: u32,
}

#[derive(Clone, Debug)]
pub struct NeumannChart {
    pub eigenvalues: Vec<f64>,
    pub chart_center: usize,
    /// `H` in the graph chart, truncated at `deg_cut`, constant dropped.
    pub hamiltonian: PolySymbol<f64>,
    /// The Hessian split into its `n` one-degree-of-freedom blocks.
    pub system: IntegrableSystem<f64>,
    pub cartan_type: CartanType,
    pub expected: CartanType,
    pub frame_residual: f64,
    /// No small integer relation among the chart frequencies was found.
    pub nonresonant: bool,
}

/// `(-1)^k binom(1/2, k)`: coefficients of `sqrt(1 - u)`.
fn sqrt_one_minus<C: Scalar>(k: u32) -> C {
    let mut c = C::one();
    for j in 0..k {
        // binom(1/2, j+1) / binom(1/2, j) = (1/2 - j) / (j + 1), times -1
        c = c * C::from_ratio(2 * j as i64 - 1, 2 * (j as i64 + 1));
    }
    c
}

/// Neumann Hamiltonian in the chart `y -> (y, sign sqrt(1 - |y|^2))` around
/// `e_i`, with `eta` the momenta induced by the chart. The induced metric is
/// `I + y y^T / s^2`, whose inverse is `I - y y^T`; the potential
/// `1/2 <A x, x>` is expanded through the series of `s`.
pub fn neumann_chart_hamiltonian<R: RealScalar>(
    a: &[R],
    i: usize,
    sign: i64,
    deg: u32,
) -> PolySymbol<R> {
    let n = a.len() - 1;
    let cuts = Cuts::new(deg, 0);
    let y = |k| PolySymbol::<R>::x(n, cuts, k);
    let eta = |k| PolySymbol::<R>::xi(n, cuts, k);
    let others: Vec<usize> = (0..=n).filter(|&j| j != i).collect();
    let mut u = PolySymbol::zero(n, cuts);
    for k in 0..n {
        u = &u + &(&y(k) * &y(k));
    }
    let mut s = PolySymbol::zero(n, cuts);
    let mut upow = PolySymbol::constant(n, cuts, R::one());
    for k in 0..=deg / 2 {
        s = &s + &upow.scale_by(&sqrt_one_minus::<R>(k));
        upow = &upow * &u;
    }
    let s = s.scale_by(&R::from_i64(sign));
    let half = R::from_ratio(1, 2);
    let mut v = (&s * &s).scale_by(&a[i]);
    for (k, &j) in others.iter().enumerate() {
        v = &v + &(&y(k) * &y(k)).scale_by(&a[j]);
    }
    let mut kin = PolySymbol::zero(n, cuts);
    let mut ydot = PolySymbol::zero(n, cuts);
    for k in 0..n {
        kin = &kin + &(&eta(k) * &eta(k));
        ydot = &ydot + &(&y(k) * &eta(k));
    }
    kin = &kin - &(&ydot * &ydot);
    let h = (&kin + &v).scale_by(&half);
    h.filter(|m| m.degree() > 0)
}

/// Splits a block-diagonal Hessian into one form per degree of freedom.
fn split_hessian<R: RealScalar>(hess: &QuadraticForm<R>) -> Vec<QuadraticForm<R>> {
    let n = hess.n();
    (0..n)
        .map(|j| {
            let idx = [j, n + j];
            QuadraticForm::new(Mat::from_fn(2 * n, 2 * n, |a, b| {
                if idx.contains(&a) && idx.contains(&b) {
                    hess.q[(a, b)].clone()
                } else {
                    R::zero()
                }
            }))
        })
        .collect()
}

/// Heuristic: no ratio of chart frequencies `sqrt|a_j - a_i|` is within
/// `1e-9` of a fraction with denominator at most [`RESONANCE_DEN`].
pub fn neumann_nonresonant(a: &[f64], i: usize) -> bool {
    let w: Vec<f64> = (0..a.len())
        .filter(|&j| j != i)
        .map(|j| (a[j] - a[i]).abs().sqrt())
        .collect();
    for p in 0..w.len() {
        for q in p + 1..w.len() {
            let ratio = w[p] / w[q];
            if let Some(fr) = rationalize(ratio, RESONANCE_DEN) {
                if (fr.to_f64() - ratio).abs() < 1e-9 {
                    return false;
                }
            }
        }
    }
    true
}

/// Classifies the Neumann fixed point `p_i`.
pub fn neumann_local_system(spec: &NeumannSpec) -> Result<NeumannChart, SystemsError> {
    neumann_local_system_with_sign(spec, 1)
}

/// As [`neumann_local_system`] in the chart around `sign * e_i`.
pub fn neumann_local_system_with_sign(
    spec: &NeumannSpec,
    sign: i64,
) -> Result<NeumannChart, SystemsError> {
    let mut a = spec.eigenvalues.clone();
    if a.len() < 2 {
        return Err(SystemsError::TooSmall);
    }
    if a.iter().any(|&v| v <= 0.0 || !v.is_finite()) {
        return Err(SystemsError::NonPositive);
    }
    a.sort_by(f64::total_cmp);
    if let Some(w) = a.windows(2).find(|w| w[0] == w[1]) {
        return Err(SystemsError::RepeatedEigenvalue(w[0]));
    }
    let i = spec.chart_center;
    if i >= a.len() {
        return Err(SystemsError::FixedPointOutOfRange {
            index: i,
            count: a.len(),
        });
    }
    let n = a.len() - 1;
    let h = neumann_chart_hamiltonian(&a, i, sign, spec.deg_cut.max(2));
    let hess = hessian_at(&h, &vec![0.0; 2 * n]);
    let forms = split_hessian(&hess);
    let cuts = Cuts::new(2, 0);
    let system = IntegrableSystem {
        n,
        symbols: forms.iter().map(|f| f.to_symbol(cuts)).collect(),
    };
    let basis = williamson_classify(&forms, WilliamsonOptions::default())?;
    Ok(NeumannChart {
        frame_residual: crate::symplectic::symplectic_residual(&basis.s),
        eigenvalues: a.clone(),
        chart_center: i,
        hamiltonian: h,
        system,
        cartan_type: basis.cartan_type,
        expected: CartanType::new(n - i, i, 0),
        nonresonant: neumann_nonresonant(&a, i),
    })
}

/// A generated system with what went into it.
#[derive(Clone, Debug)]
pub struct ModelSystem<R> {
    pub system: IntegrableSystem<R>,
    pub cartan_type: CartanType,
    /// Constant recombination: quadratic parts are `C q` before the
    /// coordinate change.
    pub planted_c: Mat<R>,
    /// `alpha[l-1][k]`: coefficient of `hbar^l` in `alpha_k` (empty for
    /// classical fixtures).
    pub planted_alpha: Vec<Vec<R>>,
    /// The symplectic change applied last.
    pub s: Mat<R>,
}

fn small<R: Scalar>(rng: &mut ChaCha8Rng) -> R {
    // dyadic keeps exact coefficients short
    R::from_ratio(rng.gen_range(-2..=2), rng.gen_range(1..=2))
}

fn random_invertible<R: RealScalar>(n: usize, rng: &mut ChaCha8Rng) -> Mat<R> {
    loop {
        let m = Mat::from_fn(n, n, |_, _| R::from_i64(rng.gen_range(-2..=2)));
        if !m.det().negligible(1.0) {
            return m;
        }
    }
}

/// Sparse random symbol on the monomials of degree `k` at `hbar^h`.
fn random_homogeneous<R: Scalar>(
    n: usize,
    cuts: Cuts,
    k: u32,
    h: u32,
    rng: &mut ChaCha8Rng,
) -> PolySymbol<R> {
    let mut p = PolySymbol::zero(n, cuts);
    for m in phase_basis(n, k) {
        if rng.gen_bool(0.3) {
            p.add_term(m.with_h(h), small(rng));
        }
    }
    p
}

fn product<R: Scalar>(q: &[PolySymbol<R>], j: usize, k: usize) -> PolySymbol<R> {
    &q[j] * &q[k]
}

/// Classical fixture of the given type up to degree `deg`. Seed 0 gives
/// the standard basis itself.
pub fn model_system<R: RealScalar>(ty: &CartanType, seed: u64, deg: u32) -> ModelSystem<R> {
    let n = ty.n();
    let cuts = Cuts::new(deg, 0);
    let q = standard_basis::<R>(ty, cuts);
    if seed == 0 {
        return ModelSystem {
            system: IntegrableSystem { n, symbols: q },
            cartan_type: ty.clone(),
            planted_c: Mat::identity(n),
            planted_alpha: Vec::new(),
            s: Mat::identity(2 * n),
        };
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c0 = random_invertible::<R>(n, &mut rng);
    let a3 = random_homogeneous::<R>(n, cuts, 3, 0, &mut rng);
    let s = random_symplectic::<R>(n, &mut rng);
    let mut symbols = Vec::with_capacity(n);
    for i in 0..n {
        let mut f = PolySymbol::zero(n, cuts);
        for j in 0..n {
            f = &f + &q[j].scale_by(&c0[(i, j)]);
            for k in j..n {
                f = &f + &product(&q, j, k).scale_by(&small(&mut rng));
            }
        }
        let f = lie_transform(&f, &a3, deg).expect("degree-3 generator");
        symbols.push(f.substitute_linear(&s).expect("square frame"));
    }
    ModelSystem {
        system: IntegrableSystem { n, symbols },
        cartan_type: ty.clone(),
        planted_c: c0,
        planted_alpha: Vec::new(),
        s,
    }
}

/// Semiclassical fixture: `P = Mh * (q - alpha(hbar))` with `Mh` in the
/// commutant, then a Moyal Lie transform and a linear symplectic change.
/// Cuts are graded with weight `deg + 2 h`, which contains every
/// `(degree <= deg, hbar^(<= h))` slot.
pub fn semiclassical_model_system<R: RealScalar>(
    ty: &CartanType,
    seed: u64,
    deg: u32,
    h: u32,
) -> ModelSystem<R> {
    let n = ty.n();
    let cuts = Cuts::graded(deg + 2 * h, h);
    let q = standard_basis::<R>(ty, cuts);
    let hb = PolySymbol::<R>::hbar(n, cuts);
    if seed == 0 {
        return ModelSystem {
            system: IntegrableSystem { n, symbols: q },
            cartan_type: ty.clone(),
            planted_c: Mat::identity(n),
            planted_alpha: vec![vec![R::zero(); n]; h as usize],
            s: Mat::identity(2 * n),
        };
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c0 = random_invertible::<R>(n, &mut rng);
    let alpha: Vec<Vec<R>> = (0..h)
        .map(|_| (0..n).map(|_| small(&mut rng)).collect())
        .collect();
    let mut shifted = Vec::with_capacity(n);
    for k in 0..n {
        let mut p = q[k].clone();
        for (l, al) in alpha.iter().enumerate() {
            p = &p - &hb.pow(l as u32 + 1).scale_by(&al[k]);
        }
        shifted.push(p);
    }
    let mut symbols = Vec::with_capacity(n);
    for i in 0..n {
        let mut p = PolySymbol::zero(n, cuts);
        for k in 0..n {
            let mut m = PolySymbol::constant(n, cuts, c0[(i, k)].clone());
            for qj in &q {
                m = &m + &qj.scale_by(&small(&mut rng));
            }
            if h > 0 {
                m = &m + &hb.scale_by(&small(&mut rng));
            }
            let (re, im) = star_parts(&m, &shifted[k]).expect("same cuts");
            debug_assert!(im.is_zero(), "commutant elements star-commute");
            p = &p + &re;
        }
        symbols.push(p);
    }
    let mut gen = random_homogeneous::<R>(n, cuts, 3, 0, &mut rng);
    if h > 0 {
        gen = &gen + &random_homogeneous::<R>(n, cuts, 1, 1, &mut rng);
        gen = &gen + &random_homogeneous::<R>(n, cuts, 2, 1, &mut rng);
    }
    let s = random_symplectic::<R>(n, &mut rng);
    let symbols = symbols
        .iter()
        .map(|p| {
            moyal_lie_transform(p, &gen)
                .expect("weight-3 generator")
                .substitute_linear(&s)
                .expect("square frame")
        })
        .collect();
    ModelSystem {
        system: IntegrableSystem { n, symbols },
        cartan_type: ty.clone(),
        planted_c: c0,
        planted_alpha: alpha,
        s,
    }
}

/// The six types with `n <= 2`.
pub fn small_types() -> Vec<CartanType> {
    vec![
        CartanType::new(1, 0, 0),
        CartanType::new(0, 1, 0),
        CartanType::new(2, 0, 0),
        CartanType::new(1, 1, 0),
        CartanType::new(0, 2, 0),
        CartanType::new(0, 0, 1),
    ]
}

/// Whether `got` equals `planted` after a signed permutation of columns
/// within each kind of block: the freedom left in a standard basis.
pub fn matches_up_to_block_order<R: RealScalar>(
    got: &Mat<R>,
    planted: &Mat<R>,
    ty: &CartanType,
    tol: f64,
) -> bool {
    use crate::symplectic::Block;
    let n = ty.n();
    // column index and kind tag for each standard basis element
    let mut kinds = Vec::with_capacity(n);
    for b in &ty.blocks {
        match b {
            Block::Elliptic(_) => kinds.push(0u8),
            Block::Hyperbolic(_) => kinds.push(1),
            Block::FocusFocus(_, _) => {
                kinds.push(2);
                kinds.push(3);
            }
        }
    }
    let close = |a: &R, b: &R, sign: i64| -> bool {
        let d = a.to_f64() - sign as f64 * b.to_f64();
        if R::is_exact() {
            d == 0.0 && (a.clone() - b.clone() * R::from_i64(sign)).is_zero()
        } else {
            d.abs() <= tol
        }
    };
    let col_matches = |gc: usize, pc: usize, sign: i64| {
        (0..n).all(|r| close(&got[(r, gc)], &planted[(r, pc)], sign))
    };
    // elliptic forms cannot change sign under a symplectic map
    let signs = |kind: u8| if kind == 0 { vec![1] } else { vec![1, -1] };
    let mut used = vec![false; n];
    fn assign(
        gc: usize,
        n: usize,
        kinds: &[u8],
        used: &mut [bool],
        ok: &dyn Fn(usize, usize) -> bool,
    ) -> bool {
        if gc == n {
            return true;
        }
        for pc in 0..n {
            if !used[pc] && kinds[pc] == kinds[gc] && ok(gc, pc) {
                used[pc] = true;
                if assign(gc + 1, n, kinds, used, ok) {
                    return true;
                }
                used[pc] = false;
            }
        }
        false
    }
    let ok = |gc: usize, pc: usize| signs(kinds[gc]).into_iter().any(|s| col_matches(gc, pc, s));
    assign(0, n, &kinds, &mut used, &ok)
}

/// Hessian matrices of the symbols' quadratic parts, as Williamson input.
pub fn quadratic_forms<R: RealScalar>(sys: &IntegrableSystem<R>) -> Vec<QuadraticForm<R>> {
    sys.symbols.iter().map(QuadraticForm::from_symbol).collect()
}

/// Classifies a fixture's quadratic parts.
pub fn classify_system<R: FrameField>(
    sys: &IntegrableSystem<R>,
    seed: u64,
) -> Result<CartanType, SymplecticError> {
    Ok(williamson_classify(
        &quadratic_forms(sys),
        WilliamsonOptions {
            seed,
            ..WilliamsonOptions::default()
        },
    )?
    .cartan_type)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;
    use crate::symplectic::verify_cartan;

    fn spec(i: usize) -> NeumannSpec {
        NeumannSpec {
            eigenvalues: vec![1.0, 2.0, 4.0],
            chart_center: i,
            deg_cut: 4,
        }
    }

    #[test]
    fn neumann_types() {
        let expect = [
            CartanType::new(2, 0, 0),
            CartanType::new(1, 1, 0),
            CartanType::new(0, 2, 0),
        ];
        for (i, e) in expect.iter().enumerate() {
            let ch = neumann_local_system(&spec(i)).unwrap();
            assert_eq!(&ch.cartan_type, e);
            assert_eq!(&ch.expected, e);
            assert!(ch.frame_residual < 1e-9);
        }
    }

    #[test]
    fn neumann_chart_is_polynomial_and_even() {
        let a: Vec<Rational> = [1, 2, 4].iter().map(|&v| Rational::from_i64(v)).collect();
        let plus = neumann_chart_hamiltonian(&a, 1, 1, 6);
        let minus = neumann_chart_hamiltonian(&a, 1, -1, 6);
        assert_eq!(plus, minus);
        // s^2 = 1 - |y|^2 exactly, so nothing survives beyond degree 4
        assert_eq!(plus.max_degree(), Some(4));
    }

    #[test]
    fn neumann_rejects_repeats() {
        let s = NeumannSpec {
            eigenvalues: vec![1.0, 2.0, 2.0],
            chart_center: 0,
            deg_cut: 4,
        };
        assert_eq!(
            neumann_local_system(&s).unwrap_err(),
            SystemsError::RepeatedEigenvalue(2.0)
        );
    }

    #[test]
    fn resonance_heuristic() {
        // frequencies 1 and 2 around the smallest eigenvalue
        assert!(!neumann_nonresonant(&[1.0, 2.0, 5.0], 0));
        assert!(neumann_nonresonant(&[1.0, 2.0, 4.0], 0));
    }

    #[test]
    fn trivial_fixtures() {
        let hyp = model_system::<Rational>(&CartanType::new(0, 1, 0), 0, 4);
        let c = Cuts::new(4, 0);
        let x = PolySymbol::<Rational>::x(1, c, 0);
        let xi = PolySymbol::<Rational>::xi(1, c, 0);
        assert_eq!(hyp.system.symbols, vec![&x * &xi]);
        let ff = model_system::<Rational>(&CartanType::new(0, 0, 1), 0, 4);
        assert_eq!(
            ff.system.symbols,
            standard_basis::<Rational>(&CartanType::new(0, 0, 1), c)
        );
    }

    #[test]
    fn fixtures_validate_themselves() {
        for ty in small_types() {
            for seed in 1..4 {
                let m = model_system::<Rational>(&ty, seed, 5);
                m.system.check_commutation().unwrap();
                let forms = quadratic_forms(&m.system);
                assert!(verify_cartan(&forms, 0, 20).passed());
                assert_eq!(classify_system(&m.system, 0).unwrap(), ty);
                let sc = semiclassical_model_system::<Rational>(&ty, seed, 3, 1);
                sc.system.check_commutation().unwrap();
                assert!(sc.system.is_semiclassical());
            }
        }
    }

    #[test]
    fn block_order_matching() {
        let ty = CartanType::new(0, 2, 0);
        let p = Mat::<Rational>::from_i64(&[&[1, 2], &[3, 4]]);
        let swapped = Mat::<Rational>::from_i64(&[&[-2, 1], &[-4, 3]]);
        assert!(matches_up_to_block_order(&swapped, &p, &ty, 0.0));
        let ell = CartanType::new(2, 0, 0);
        assert!(!matches_up_to_block_order(&swapped, &p, &ell, 0.0));
    }
}
