use super::cartan::{combination, spectral_scale};
use super::{
    check_symplectic, standard_basis, verify_cartan, Block, CartanReport, CartanType,
    QuadraticForm, SymplecticError,
};
use crate::linalg::Mat;
use crate::poly::Cuts;
use crate::scalar::{rationalize, Complex64, ComplexScalar, Rational, RealScalar, Scalar};
use nalgebra::DMatrix;

/// Largest denominator tried when lifting a float eigenvalue to the
/// rationals.
const MAX_EIGEN_DEN: i64 = 1_000_000;
/// Relative threshold separating real, imaginary and complex eigenvalues.
const KIND_TOL: f64 = 1e-8;

/// Fields a Williamson frame can be built over.
pub trait FrameField: RealScalar {
    /// Lifts a float eigenvalue estimate into the complexified field.
    fn lift_eigenvalue(z: Complex64) -> Option<Self::Cplx>;
    /// A nonzero vector spanning the (one-dimensional) kernel of `a - mu I`.
    fn eigenvector(a: &Mat<Self::Cplx>, mu: &Self::Cplx) -> Option<Vec<Self::Cplx>>;
}

impl FrameField for f64 {
    fn lift_eigenvalue(z: Complex64) -> Option<Complex64> {
        Some(z)
    }

    fn eigenvector(a: &Mat<Complex64>, mu: &Complex64) -> Option<Vec<Complex64>> {
        let dim = a.rows();
        let m = DMatrix::from_fn(
            dim,
            dim,
            |i, j| {
                if i == j {
                    a[(i, j)] - mu
                } else {
                    a[(i, j)]
                }
            },
        );
        let svd = m.svd(false, true);
        let vt = svd.v_t?;
        let (k, _) = svd
            .singular_values
            .iter()
            .enumerate()
            .min_by(|x, y| x.1.total_cmp(y.1))?;
        let v: Vec<Complex64> = (0..dim).map(|j| vt[(k, j)].conj()).collect();
        let (_, lead) = v
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.norm().total_cmp(&y.1.norm()))?;
        let lead = *lead;
        Some(v.into_iter().map(|c| c / lead).collect())
    }
}

impl FrameField for Rational {
    fn lift_eigenvalue(z: Complex64) -> Option<<Rational as RealScalar>::Cplx> {
        let re = if z.re == 0.0 {
            Rational::zero()
        } else {
            rationalize(z.re, MAX_EIGEN_DEN)?
        };
        let im = if z.im == 0.0 {
            Rational::zero()
        } else {
            rationalize(z.im, MAX_EIGEN_DEN)?
        };
        Some(ComplexScalar::new(re, im))
    }

    fn eigenvector(
        a: &Mat<<Rational as RealScalar>::Cplx>,
        mu: &<Rational as RealScalar>::Cplx,
    ) -> Option<Vec<<Rational as RealScalar>::Cplx>> {
        let dim = a.rows();
        let m = Mat::from_fn(dim, dim, |i, j| {
            if i == j {
                a[(i, j)].clone() - mu.clone()
            } else {
                a[(i, j)].clone()
            }
        });
        let mut ns = m.nullspace();
        if ns.len() != 1 {
            return None;
        }
        let v = ns.pop()?;
        let lead = v.iter().find(|c| !Scalar::is_zero(*c))?.clone();
        Some(v.into_iter().map(|c| c / lead.clone()).collect())
    }
}

#[derive(Clone, Copy, Debug)]
pub struct WilliamsonOptions {
    pub seed: u64,
    pub max_retries: usize,
}

impl Default for WilliamsonOptions {
    fn default() -> Self {
        WilliamsonOptions {
            seed: 0,
            max_retries: 20,
        }
    }
}

/// Result of [`williamson_classify`]: `forms[i] o S = sum_j C[i][j] q_std[j]`.
#[derive(Clone, Debug)]
pub struct CartanBasis<R> {
    pub cartan_type: CartanType,
    pub q_std: Vec<QuadraticForm<R>>,
    pub s: Mat<R>,
    pub c: Mat<R>,
    pub report: CartanReport,
}

#[derive(Clone, Debug)]
struct Spectrum {
    hyperbolic: Vec<Complex64>,
    elliptic: Vec<Complex64>,
    focus: Vec<Complex64>,
}

fn split_spectrum(eigs: &[[f64; 2]], scale: f64) -> Spectrum {
    let tol = KIND_TOL * scale;
    let mut sp = Spectrum {
        hyperbolic: Vec::new(),
        elliptic: Vec::new(),
        focus: Vec::new(),
    };
    for &[re, im] in eigs {
        if im.abs() < tol {
            if re > 0.0 {
                sp.hyperbolic.push(Complex64::new(re, 0.0));
            }
        } else if re.abs() < tol {
            if im > 0.0 {
                sp.elliptic.push(Complex64::new(0.0, im));
            }
        } else if re > 0.0 && im < 0.0 {
            sp.focus.push(Complex64::new(re, im));
        }
    }
    for v in [&mut sp.hyperbolic, &mut sp.elliptic, &mut sp.focus] {
        v.sort_by(|a, b| a.norm().total_cmp(&b.norm()));
    }
    sp
}

fn omega<R: Scalar>(a: &[R], b: &[R]) -> R {
    let n = a.len() / 2;
    let mut acc = R::zero();
    for k in 0..n {
        acc = acc + a[k].clone() * b[n + k].clone() - a[n + k].clone() * b[k].clone();
    }
    acc
}

fn re_part<Z: ComplexScalar>(v: &[Z]) -> Vec<Z::Real> {
    v.iter().map(ComplexScalar::re).collect()
}

fn im_part<Z: ComplexScalar>(v: &[Z]) -> Vec<Z::Real> {
    v.iter().map(ComplexScalar::im).collect()
}

/// Power of two `2^e` closest to `sqrt(|v| / |u|)`. Rescaling `u` by it and
/// `v` by its inverse is symplectic, keeps the standard forms and balances
/// the frame columns. Exact in every field, floats included.
fn balance<R: RealScalar>(u: &[&[R]], v: &[&[R]]) -> (R, R) {
    let norm = |c: &[&[R]]| {
        c.iter()
            .flat_map(|x| x.iter())
            .map(|x| x.to_f64().abs())
            .fold(0.0, f64::max)
    };
    let (nu, nv) = (norm(u), norm(v));
    if nu == 0.0 || nv == 0.0 {
        return (R::one(), R::one());
    }
    let e = (0.5 * (nv / nu).log2()).round().clamp(-60.0, 60.0) as i32;
    let p = R::from_i64(1i64 << e.unsigned_abs());
    if e >= 0 {
        (p.clone(), R::one() / p)
    } else {
        (R::one() / p.clone(), p)
    }
}

fn scaled<R: Scalar>(v: &[R], s: &R) -> Vec<R> {
    v.iter().map(|x| x.clone() * s.clone()).collect()
}

fn lift<R: FrameField>(z: Complex64) -> Result<R::Cplx, SymplecticError> {
    R::lift_eigenvalue(z)
        .ok_or_else(|| SymplecticError::IrrationalFrame(format!("eigenvalue {z} is not rational")))
}

fn eigvec<R: FrameField>(
    a: &Mat<R::Cplx>,
    mu: &R::Cplx,
    z: Complex64,
) -> Result<Vec<R::Cplx>, SymplecticError> {
    R::eigenvector(a, mu).ok_or_else(|| {
        SymplecticError::IrrationalFrame(format!("no eigenvector for lifted eigenvalue {z}"))
    })
}

/// Classifies `n` commuting quadratic forms in `2n` variables.
///
/// Returns the type, a symplectic `S` whose columns are
/// `(u_1..u_n | v_1..v_n)` with `omega(u_k, v_k) = 1`, and `C` with
/// `forms[i] o S = sum_j C[i][j] q_std[j]`. Over the rationals the frame is
/// exact or the call fails with [`SymplecticError::IrrationalFrame`].
pub fn williamson_classify<R: FrameField>(
    forms: &[QuadraticForm<R>],
    opts: WilliamsonOptions,
) -> Result<CartanBasis<R>, SymplecticError> {
    let n = forms.len();
    if let Some(f) = forms
        .iter()
        .find(|f| f.q.rows() != 2 * n || f.q.cols() != 2 * n)
    {
        return Err(SymplecticError::SizeMismatch {
            expected: n,
            size: 2 * n,
            got: f.q.rows(),
        });
    }
    let report = verify_cartan(forms, opts.seed, opts.max_retries);
    if let Some(check) = report.failure() {
        return Err(SymplecticError::NotCartan {
            check,
            detail: format!(
                "span {} of {}, generic element {:?}",
                report.span_dim, n, report.generic
            ),
        });
    }
    if !report.simple_spectrum {
        return Err(SymplecticError::ResonantGenericityFailure {
            retries: opts.max_retries,
        });
    }
    let ham: Vec<Mat<R>> = forms
        .iter()
        .map(QuadraticForm::hamiltonian_matrix)
        .collect();
    let a = combination(&ham, &report.generic);
    let scale = spectral_scale(&a.to_f64());
    let sp = split_spectrum(&report.eigenvalues, scale);
    let (m_h, m_e, m_f) = (sp.hyperbolic.len(), sp.elliptic.len(), sp.focus.len());
    if m_h + m_e + 2 * m_f != n {
        return Err(SymplecticError::NotCartan {
            check: super::CartanCheck::Semisimple,
            detail: "spectrum does not split into Williamson blocks".into(),
        });
    }
    let ty = CartanType::new(m_e, m_h, m_f);
    let ac = a.complexify();
    let dim = 2 * n;
    let mut s = Mat::<R>::zeros(dim, dim);
    let mut put = |col: usize, v: &[R]| {
        for (i, x) in v.iter().enumerate() {
            s[(i, col)] = x.clone();
        }
    };
    let mut hyp = sp.hyperbolic.iter();
    let mut ell = sp.elliptic.iter();
    let mut foc = sp.focus.iter();
    for block in &ty.blocks {
        match *block {
            Block::Hyperbolic(k) => {
                let z = *hyp.next().expect("counted");
                let mu = lift::<R>(z)?;
                let u = re_part(&eigvec::<R>(&ac, &mu, z)?);
                let v = re_part(&eigvec::<R>(&ac, &(-mu), -z)?);
                let w = omega(&u, &v);
                let v = scaled(&v, &(R::one() / w));
                let (a, b) = balance(&[&u], &[&v]);
                let (u, v) = (scaled(&u, &a), scaled(&v, &b));
                put(k, &u);
                put(n + k, &v);
            }
            Block::Elliptic(k) => {
                let z = *ell.next().expect("counted");
                let mu = lift::<R>(z)?;
                let w = eigvec::<R>(&ac, &mu, z)?;
                let (u, mut v) = (re_part(&w), im_part(&w));
                let mut om = omega(&u, &v);
                if om < R::zero() {
                    v = v.into_iter().map(|x| -x).collect();
                    om = -om;
                }
                let sc = R::Cplx::unit_scale_for(&om).ok_or_else(|| {
                    SymplecticError::IrrationalFrame(format!(
                        "elliptic block {k}: {om:?} is not a sum of two squares"
                    ))
                })?;
                let w: Vec<R::Cplx> = u
                    .iter()
                    .zip(&v)
                    .map(|(x, y)| R::Cplx::new(x.clone(), y.clone()) * sc.clone())
                    .collect();
                put(k, &re_part(&w));
                put(n + k, &im_part(&w));
            }
            Block::FocusFocus(k, l) => {
                let z = *foc.next().expect("counted");
                let mu = lift::<R>(z)?;
                let w = eigvec::<R>(&ac, &mu, z)?;
                let (u1, u2) = (re_part(&w), im_part(&w));
                let w2 = eigvec::<R>(&ac, &(-mu), -z)?;
                let (p1, p2) = (re_part(&w2), im_part(&w2));
                let g = Mat::from_rows(vec![
                    vec![omega(&u1, &p1), omega(&u1, &p2)],
                    vec![omega(&u2, &p1), omega(&u2, &p2)],
                ]);
                let gi = g.inverse().ok_or_else(|| {
                    SymplecticError::IrrationalFrame(format!("focus block {k}: degenerate pairing"))
                })?;
                let comb = |c1: &R, c2: &R| -> Vec<R> {
                    p1.iter()
                        .zip(&p2)
                        .map(|(a, b)| a.clone() * c1.clone() + b.clone() * c2.clone())
                        .collect()
                };
                let v1 = comb(&gi[(0, 0)], &gi[(1, 0)]);
                let v2 = comb(&gi[(0, 1)], &gi[(1, 1)]);
                let (a, b) = balance(&[&u1, &u2], &[&v1, &v2]);
                let (u1, u2) = (scaled(&u1, &a), scaled(&u2, &a));
                let (v1, v2) = (scaled(&v1, &b), scaled(&v2, &b));
                put(k, &u1);
                put(l, &u2);
                put(n + k, &v1);
                put(n + l, &v2);
            }
        }
    }
    if !check_symplectic(&s) {
        return Err(SymplecticError::IrrationalFrame(
            "constructed frame is not symplectic".into(),
        ));
    }
    let q_std: Vec<QuadraticForm<R>> = standard_basis::<R>(&ty, Cuts::new(2, 0))
        .iter()
        .map(QuadraticForm::from_symbol)
        .collect();
    let mut c = Mat::<R>::zeros(n, n);
    for (i, f) in forms.iter().enumerate() {
        let t = f.conjugate(&s).q;
        let mut j = 0;
        for block in &ty.blocks {
            match *block {
                Block::Hyperbolic(k) => {
                    c[(i, j)] = t[(k, n + k)].clone();
                    j += 1;
                }
                Block::Elliptic(k) => {
                    c[(i, j)] = t[(k, k)].clone() / R::from_i64(2);
                    j += 1;
                }
                Block::FocusFocus(k, l) => {
                    c[(i, j)] = t[(k, n + l)].clone();
                    c[(i, j + 1)] = t[(k, n + k)].clone();
                    j += 2;
                }
            }
        }
        let mut resid = t.clone();
        for (jj, q) in q_std.iter().enumerate() {
            resid = resid.sub(&q.q.scale(&c[(i, jj)]));
        }
        if !resid.is_zero_within(KIND_TOL * t.max_abs().max(1.0)) {
            return Err(SymplecticError::IrrationalFrame(format!(
                "form {i} is not a combination of the model forms in the frame"
            )));
        }
    }
    Ok(CartanBasis {
        cartan_type: ty,
        q_std,
        s,
        c,
        report,
    })
}
