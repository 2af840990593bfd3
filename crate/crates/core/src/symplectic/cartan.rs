use std::fmt;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::QuadraticForm;
use crate::linalg::Mat;
use crate::scalar::{Complex64, RealScalar, FLOAT_ZERO_TOL};

/// Relative SVD cutoff for numerical rank.
pub(crate) const RANK_TOL: f64 = 1e-8;
/// Relative distance under which two eigenvalues count as one.
pub(crate) const CLUSTER_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CartanCheck {
    Commuting,
    Span,
    Semisimple,
}

impl fmt::Display for CartanCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CartanCheck::Commuting => "not commuting",
            CartanCheck::Span => "span dimension below n",
            CartanCheck::Semisimple => "not semisimple",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CartanReport {
    pub n: usize,
    pub commuting: bool,
    pub span_dim: usize,
    pub semisimple: bool,
    /// Coefficients of the generic combination that was tested.
    pub generic: Vec<i64>,
    /// Whether that combination has `2n` distinct eigenvalues.
    pub simple_spectrum: bool,
    /// Eigenvalues of its Hamiltonian matrix as `[re, im]`.
    pub eigenvalues: Vec<[f64; 2]>,
}

impl CartanReport {
    pub fn failure(&self) -> Option<CartanCheck> {
        if !self.commuting {
            Some(CartanCheck::Commuting)
        } else if self.span_dim != self.n {
            Some(CartanCheck::Span)
        } else if !self.semisimple {
            Some(CartanCheck::Semisimple)
        } else {
            None
        }
    }

    pub fn passed(&self) -> bool {
        self.failure().is_none()
    }
}

pub(crate) fn to_na(m: &Mat<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)])
}

pub(crate) fn eigenvalues(a: &Mat<f64>) -> Vec<Complex64> {
    to_na(a).complex_eigenvalues().iter().copied().collect()
}

pub(crate) fn spectral_scale(a: &Mat<f64>) -> f64 {
    to_na(a).norm().max(f64::MIN_POSITIVE)
}

/// Eigenvalues grouped by proximity (relative [`CLUSTER_TOL`]).
pub(crate) fn clusters(eigs: &[Complex64], scale: f64) -> Vec<Vec<Complex64>> {
    let mut out: Vec<Vec<Complex64>> = Vec::new();
    for &e in eigs {
        match out
            .iter_mut()
            .find(|c| (c[0] - e).norm() <= CLUSTER_TOL * scale)
        {
            Some(c) => c.push(e),
            None => out.push(vec![e]),
        }
    }
    out
}

/// Dimension of the numerical kernel of `a - mu I`.
pub(crate) fn kernel_dim(a: &Mat<f64>, mu: Complex64, scale: f64) -> usize {
    let dim = a.rows();
    let m = DMatrix::from_fn(dim, dim, |i, j| {
        let d = if i == j { mu } else { Complex64::new(0.0, 0.0) };
        Complex64::new(a[(i, j)], 0.0) - d
    });
    let sv = m.svd(false, false).singular_values;
    sv.iter().filter(|&&s| s <= RANK_TOL * scale).count()
}

pub(crate) fn generic_coeffs(n: usize, rng: &mut ChaCha8Rng) -> Vec<i64> {
    (0..n).map(|_| rng.gen_range(1..=1000)).collect()
}

pub(crate) fn combination<R: RealScalar>(mats: &[Mat<R>], c: &[i64]) -> Mat<R> {
    let mut acc = Mat::zeros(mats[0].rows(), mats[0].cols());
    for (m, &ci) in mats.iter().zip(c) {
        acc = acc.add(&m.scale(&R::from_i64(ci)));
    }
    acc
}

pub(crate) fn has_simple_spectrum(eigs: &[Complex64], scale: f64) -> bool {
    clusters(eigs, scale).len() == eigs.len()
}

/// Checks that the forms commute, span an `n`-dimensional space, and that a
/// generic combination acts semisimply. The generic combination is drawn
/// from `seed`; up to `max_retries` draws are made looking for a simple
/// spectrum.
pub fn verify_cartan<R: RealScalar>(
    forms: &[QuadraticForm<R>],
    seed: u64,
    max_retries: usize,
) -> CartanReport {
    let n = forms.len();
    let ham: Vec<Mat<R>> = forms
        .iter()
        .map(QuadraticForm::hamiltonian_matrix)
        .collect();
    let scale = ham.iter().map(Mat::max_abs).fold(0.0, f64::max).max(1.0);
    let mut commuting = true;
    for i in 0..n {
        for j in i + 1..n {
            let c = ham[i].mul(&ham[j]).sub(&ham[j].mul(&ham[i]));
            if !c.is_zero_within(FLOAT_ZERO_TOL * scale * scale) {
                commuting = false;
            }
        }
    }
    let dim = forms.first().map_or(0, |f| f.q.rows());
    let flat = Mat::from_fn(n, dim * dim, |i, k| forms[i].q[(k / dim, k % dim)].clone());
    let span_dim = if n == 0 { 0 } else { flat.rank() };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ham_f: Vec<Mat<f64>> = ham.iter().map(Mat::to_f64).collect();
    let mut generic = Vec::new();
    let mut eigs = Vec::new();
    let mut simple = false;
    for _ in 0..max_retries.max(1) {
        generic = generic_coeffs(n, &mut rng);
        if n == 0 {
            break;
        }
        let a = combination(&ham_f, &generic);
        eigs = eigenvalues(&a);
        if has_simple_spectrum(&eigs, spectral_scale(&a)) {
            simple = true;
            break;
        }
    }
    let semisimple = if simple || n == 0 {
        true
    } else {
        let a = combination(&ham_f, &generic);
        let s = spectral_scale(&a);
        clusters(&eigs, s)
            .iter()
            .all(|c| kernel_dim(&a, c[0], s) == c.len())
    };
    CartanReport {
        n,
        commuting,
        span_dim,
        semisimple,
        generic,
        simple_spectrum: simple,
        eigenvalues: eigs.iter().map(|e| [e.re, e.im]).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::{Cuts, PolySymbol};
    use crate::scalar::Rational;

    type P = PolySymbol<Rational>;

    fn forms(ps: &[P]) -> Vec<QuadraticForm<Rational>> {
        ps.iter().map(QuadraticForm::from_symbol).collect()
    }

    #[test]
    fn nilpotent_is_not_semisimple() {
        let c = Cuts::new(2, 0);
        let xi = P::xi(1, c, 0);
        let rep = verify_cartan(&forms(&[&xi * &xi]), 1, 20);
        assert!(rep.commuting);
        assert_eq!(rep.span_dim, 1);
        assert!(!rep.semisimple);
        assert_eq!(rep.failure(), Some(CartanCheck::Semisimple));
        assert_eq!(rep.failure().unwrap().to_string(), "not semisimple");
    }

    #[test]
    fn model_pair_passes() {
        let c = Cuts::new(2, 0);
        let n = 2;
        let q1 = &P::x(n, c, 0) * &P::xi(n, c, 0);
        let q2 = &(&P::x(n, c, 1) * &P::x(n, c, 1)) + &(&P::xi(n, c, 1) * &P::xi(n, c, 1));
        let rep = verify_cartan(&forms(&[q1, q2]), 1, 20);
        assert!(rep.passed(), "{rep:?}");
        assert!(rep.simple_spectrum);
    }

    #[test]
    fn dependent_forms_fail_span() {
        let c = Cuts::new(2, 0);
        let n = 2;
        let q1 = &P::x(n, c, 0) * &P::xi(n, c, 0);
        let rep = verify_cartan(&forms(&[q1.clone(), q1]), 1, 20);
        assert_eq!(rep.span_dim, 1);
        assert_eq!(rep.failure(), Some(CartanCheck::Span));
    }

    #[test]
    fn non_commuting_forms_fail() {
        let c = Cuts::new(2, 0);
        let n = 2;
        let q1 = &P::x(n, c, 0) * &P::xi(n, c, 0);
        let q2 = &P::x(n, c, 0) * &P::x(n, c, 1);
        let rep = verify_cartan(&forms(&[q1, q2]), 1, 20);
        assert_eq!(rep.failure(), Some(CartanCheck::Commuting));
    }
}
