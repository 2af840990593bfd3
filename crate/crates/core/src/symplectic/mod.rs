//! Linear symplectic algebra: Hessians, the Cartan test and Williamson
//! classification of commuting quadratic forms.

mod cartan;
mod williamson;

pub use cartan::{verify_cartan, CartanCheck, CartanReport};
pub use williamson::{williamson_classify, CartanBasis, FrameField, WilliamsonOptions};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::linalg::{standard_j, Mat};
use crate::poly::{Cuts, Monomial, PolySymbol};
use crate::scalar::{RealScalar, Scalar};

/// Entrywise tolerance on `S^T J S - J` for float frames.
pub const TOL_SYMP: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SymplecticError {
    #[error("not a Cartan subalgebra: {check} ({detail})")]
    NotCartan { check: CartanCheck, detail: String },
    #[error("no generic element with simple spectrum after {retries} tries")]
    ResonantGenericityFailure { retries: usize },
    #[error("no exact frame over the rationals: {0}")]
    IrrationalFrame(String),
    #[error("expected {expected} forms of size {size}, got {got}")]
    SizeMismatch {
        expected: usize,
        size: usize,
        got: usize,
    },
}

/// `q(z) = 1/2 z^T Q z` with `Q` symmetric (so `Q` is the Hessian).
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticForm<R> {
    pub q: Mat<R>,
}

impl<R: RealScalar> QuadraticForm<R> {
    pub fn new(q: Mat<R>) -> Self {
        debug_assert!(q.is_square() && q.rows().is_multiple_of(2));
        QuadraticForm { q }
    }

    pub fn n(&self) -> usize {
        self.q.rows() / 2
    }

    /// Reads the `hbar^0`, degree-2 part of `p`.
    pub fn from_symbol(p: &PolySymbol<R>) -> Self {
        hessian_at(p, &vec![R::zero(); 2 * p.n()])
    }

    pub fn to_symbol(&self, cuts: Cuts) -> PolySymbol<R> {
        let dim = self.q.rows();
        let n = dim / 2;
        let half = R::from_ratio(1, 2);
        let mut p = PolySymbol::zero(n, cuts);
        for a in 0..dim {
            for b in 0..dim {
                let m = Monomial::one(n)
                    .with_exp(a, 1)
                    .mul(&Monomial::one(n).with_exp(b, 1));
                p.add_term(m, self.q[(a, b)].clone() * half.clone());
            }
        }
        p
    }

    /// `J Q`, the matrix of the linear Hamiltonian vector field.
    pub fn hamiltonian_matrix(&self) -> Mat<R> {
        standard_j::<R>(self.n()).mul(&self.q)
    }

    pub fn is_symmetric(&self) -> bool {
        let d = self.q.sub(&self.q.transpose());
        d.is_zero_within(1e-12 * self.q.max_abs().max(1.0))
    }

    /// `q o S`, i.e. `S^T Q S`.
    pub fn conjugate(&self, s: &Mat<R>) -> Self {
        QuadraticForm::new(s.transpose().mul(&self.q).mul(s))
    }

    pub fn to_f64(&self) -> QuadraticForm<f64> {
        QuadraticForm::new(self.q.to_f64())
    }
}

/// Matrix of second derivatives of the `hbar^0` part of `f` at `point`.
pub fn hessian_at<R: RealScalar>(f: &PolySymbol<R>, point: &[R]) -> QuadraticForm<R> {
    let dim = 2 * f.n();
    let f0 = f.h_coeff(0);
    let zero_h = R::zero();
    let at_origin = point.iter().all(Scalar::is_zero);
    let q = Mat::from_fn(dim, dim, |a, b| {
        let d = f0.derivative(a).derivative(b);
        if at_origin {
            d.coeff(&Monomial::one(f.n()))
        } else {
            d.evaluate(point, &zero_h).expect("point has dimension 2n")
        }
    });
    QuadraticForm::new(q)
}

/// `S^T J S = J`, exactly for exact fields, within [`TOL_SYMP`] otherwise.
pub fn check_symplectic<R: RealScalar>(s: &Mat<R>) -> bool {
    if !s.is_square() || !s.rows().is_multiple_of(2) {
        return false;
    }
    let j = standard_j::<R>(s.rows() / 2);
    let d = s.transpose().mul(&j).mul(s).sub(&j);
    d.is_zero_within(TOL_SYMP)
}

/// Symplectic residual `max |S^T J S - J|`.
pub fn symplectic_residual<R: RealScalar>(s: &Mat<R>) -> f64 {
    let j = standard_j::<R>(s.rows() / 2);
    s.transpose().mul(&j).mul(s).sub(&j).max_abs()
}

/// One standard block and the degrees of freedom it occupies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Block {
    Hyperbolic(usize),
    Elliptic(usize),
    FocusFocus(usize, usize),
}

/// Williamson type with its block layout.
///
/// Blocks are laid out hyperbolic first, then elliptic, then focus-focus
/// pairs on consecutive degrees of freedom.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CartanType {
    pub m_e: usize,
    pub m_h: usize,
    pub m_f: usize,
    pub blocks: Vec<Block>,
}

impl CartanType {
    pub fn new(m_e: usize, m_h: usize, m_f: usize) -> Self {
        let mut blocks = Vec::new();
        let mut k = 0;
        for _ in 0..m_h {
            blocks.push(Block::Hyperbolic(k));
            k += 1;
        }
        for _ in 0..m_e {
            blocks.push(Block::Elliptic(k));
            k += 1;
        }
        for _ in 0..m_f {
            blocks.push(Block::FocusFocus(k, k + 1));
            k += 2;
        }
        CartanType {
            m_e,
            m_h,
            m_f,
            blocks,
        }
    }

    pub fn n(&self) -> usize {
        self.m_e + self.m_h + 2 * self.m_f
    }

    pub fn signature(&self) -> (usize, usize, usize) {
        (self.m_e, self.m_h, self.m_f)
    }
}

/// The model quadratics `q_1..q_n` of a type, as symbols:
/// `x_k xi_k` (hyperbolic), `x_k^2 + xi_k^2` (elliptic) and, for a focus
/// pair, `x_k xi_{k+1} - x_{k+1} xi_k` followed by `x_k xi_k + x_{k+1} xi_{k+1}`.
pub fn standard_basis<C: Scalar>(ty: &CartanType, cuts: Cuts) -> Vec<PolySymbol<C>> {
    let n = ty.n();
    let x = |k| PolySymbol::<C>::x(n, cuts, k);
    let xi = |k| PolySymbol::<C>::xi(n, cuts, k);
    let mut out = Vec::with_capacity(n);
    for b in &ty.blocks {
        match *b {
            Block::Hyperbolic(k) => out.push(&x(k) * &xi(k)),
            Block::Elliptic(k) => out.push(&(&x(k) * &x(k)) + &(&xi(k) * &xi(k))),
            Block::FocusFocus(k, l) => {
                out.push(&(&x(k) * &xi(l)) - &(&x(l) * &xi(k)));
                out.push(&(&x(k) * &xi(k)) + &(&x(l) * &xi(l)));
            }
        }
    }
    out
}

/// Seeded random symplectic matrix with small rational entries: a product of
/// shears `[[I, B], [0, I]]`, `[[I, 0], [B, I]]` (B symmetric) and block
/// maps `diag(G, G^-T)`.
pub fn random_symplectic<R: RealScalar>(n: usize, rng: &mut impl Rng) -> Mat<R> {
    let dim = 2 * n;
    let mut s = Mat::<R>::identity(dim);
    for step in 0..3 {
        let g = match step {
            0 | 2 => {
                let mut b = Mat::<R>::zeros(n, n);
                for i in 0..n {
                    for j in i..n {
                        let v = R::from_ratio(rng.gen_range(-2..=2), rng.gen_range(1..=2));
                        b[(i, j)] = v.clone();
                        b[(j, i)] = v;
                    }
                }
                let upper = step == 0;
                Mat::from_fn(dim, dim, |i, j| {
                    if i == j {
                        R::one()
                    } else if upper && i < n && j >= n {
                        b[(i, j - n)].clone()
                    } else if !upper && i >= n && j < n {
                        b[(i - n, j)].clone()
                    } else {
                        R::zero()
                    }
                })
            }
            _ => {
                // unit lower triangular times a diagonal of +-1, +-2, +-1/2
                let mut g = Mat::<R>::identity(n);
                for i in 0..n {
                    for j in 0..i {
                        g[(i, j)] = R::from_i64(rng.gen_range(-1..=1));
                    }
                }
                let diag = Mat::from_fn(n, n, |i, j| {
                    if i != j {
                        return R::zero();
                    }
                    let sign = if rng.gen_bool(0.5) { 1 } else { -1 };
                    match rng.gen_range(0..3) {
                        0 => R::from_i64(sign),
                        1 => R::from_i64(2 * sign),
                        _ => R::from_ratio(sign, 2),
                    }
                });
                let g = g.mul(&diag);
                let g_inv_t = g
                    .inverse()
                    .expect("unit triangular times diagonal")
                    .transpose();
                Mat::from_fn(dim, dim, |i, j| match (i < n, j < n) {
                    (true, true) => g[(i, j)].clone(),
                    (false, false) => g_inv_t[(i - n, j - n)].clone(),
                    _ => R::zero(),
                })
            }
        };
        s = s.mul(&g);
    }
    s
}
