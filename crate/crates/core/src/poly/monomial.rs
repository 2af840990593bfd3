use std::cmp::Ordering;

use smallvec::SmallVec;

/// `x^alpha xi^beta hbar^k`, stored as one exponent vector over
/// `(x_1..x_n, xi_1..xi_n)` plus the `hbar` power.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Monomial {
    z: SmallVec<[u8; 8]>,
    h: u8,
}

impl Monomial {
    pub fn one(n: usize) -> Self {
        Monomial {
            z: SmallVec::from_elem(0, 2 * n),
            h: 0,
        }
    }

    pub fn new(x: &[u32], xi: &[u32], h: u32) -> Self {
        assert_eq!(
            x.len(),
            xi.len(),
            "x and xi exponent blocks differ in length"
        );
        let z = x.iter().chain(xi).map(|&e| to_u8(e)).collect();
        Monomial { z, h: to_u8(h) }
    }

    pub fn from_exponents(z: &[u32], h: u32) -> Self {
        assert!(
            z.len().is_multiple_of(2),
            "phase exponent vector must have even length"
        );
        Monomial {
            z: z.iter().map(|&e| to_u8(e)).collect(),
            h: to_u8(h),
        }
    }

    /// Number of degrees of freedom.
    pub fn n(&self) -> usize {
        self.z.len() / 2
    }

    pub fn exps(&self) -> &[u8] {
        &self.z
    }

    pub fn exp(&self, var: usize) -> u32 {
        self.z[var] as u32
    }

    pub fn x_exp(&self) -> &[u8] {
        &self.z[..self.n()]
    }

    pub fn xi_exp(&self) -> &[u8] {
        &self.z[self.n()..]
    }

    pub fn h(&self) -> u32 {
        self.h as u32
    }

    /// Phase degree `|alpha| + |beta|`.
    pub fn degree(&self) -> u32 {
        self.z.iter().map(|&e| e as u32).sum()
    }

    /// Phase degree plus twice the `hbar` power.
    pub fn weight(&self) -> u32 {
        self.degree() + 2 * self.h()
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        debug_assert_eq!(self.z.len(), other.z.len());
        Monomial {
            z: self
                .z
                .iter()
                .zip(&other.z)
                .map(|(a, b)| to_u8(*a as u32 + *b as u32))
                .collect(),
            h: to_u8(self.h as u32 + other.h as u32),
        }
    }

    pub fn with_h(&self, h: u32) -> Monomial {
        Monomial {
            z: self.z.clone(),
            h: to_u8(h),
        }
    }

    pub fn with_exp(&self, var: usize, e: u32) -> Monomial {
        let mut m = self.clone();
        m.z[var] = to_u8(e);
        m
    }

    /// Exponents over the x block and xi block as `u32` vectors.
    pub fn split(&self) -> (Vec<u32>, Vec<u32>) {
        (
            self.x_exp().iter().map(|&e| e as u32).collect(),
            self.xi_exp().iter().map(|&e| e as u32).collect(),
        )
    }
}

fn to_u8(e: u32) -> u8 {
    u8::try_from(e).expect("exponent exceeds 255")
}

/// Graded order: phase degree, then `hbar` power, then lexicographic with
/// `x_1 > x_2 > .. > xi_n` (so `x_1^k` leads its degree).
impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then(self.h.cmp(&other.h))
            .then_with(|| other.z.cmp(&self.z))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// All exponent vectors of length `vars` with total degree `k`, in
/// descending lexicographic order.
pub fn exponent_vectors(vars: usize, k: u32) -> Vec<Vec<u32>> {
    fn rec(vars: usize, k: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if vars == 1 {
            prefix.push(k);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for e in (0..=k).rev() {
            prefix.push(e);
            rec(vars - 1, k - e, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if vars == 0 {
        if k == 0 {
            out.push(Vec::new());
        }
        return out;
    }
    rec(vars, k, &mut Vec::with_capacity(vars), &mut out);
    out
}

/// Ordered monomial basis of the homogeneous space `P_k` in `2n` variables
/// (no `hbar`).
pub fn phase_basis(n: usize, k: u32) -> Vec<Monomial> {
    exponent_vectors(2 * n, k)
        .into_iter()
        .map(|z| Monomial::from_exponents(&z, 0))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basis_dimension_counts() {
        // C(3 + 3, 3) monomials of degree 3 in four variables.
        assert_eq!(phase_basis(2, 3).len(), 20);
        assert_eq!(phase_basis(1, 4).len(), 5);
        assert_eq!(phase_basis(3, 0).len(), 1);
    }

    #[test]
    fn basis_is_sorted_by_order() {
        let b = phase_basis(2, 3);
        assert!(b.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(b[0], Monomial::new(&[3, 0], &[0, 0], 0));
    }

    #[test]
    fn graded_before_lex() {
        let a = Monomial::new(&[0], &[1], 0);
        let b = Monomial::new(&[2], &[0], 0);
        assert!(a < b);
        let c = Monomial::new(&[1], &[0], 0);
        assert!(c < a);
    }
}
