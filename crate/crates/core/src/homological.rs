//! The formal homological equation `{f, q_i} = g_i - F_i`.
//!
//! For a generic `q = sum lambda_i q_i`, `ad_q : f -> {f, q}` is semisimple on
//! each homogeneous space `P_k`, so `P_k = ker ⊕ im`. The matrix of `ad_q`
//! in the monomial basis is block diagonal once the basis is split into the
//! connected components of its nonzero pattern; each block is handled by one
//! exact inverse, cached per degree.

use std::collections::HashMap;

use crate::brackets::poisson;
use crate::linalg::Mat;
use crate::poly::{phase_basis, Cuts, GradedComponent, Monomial, PolyError, PolySymbol};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum HomologicalError {
    #[error("incompatible right-hand sides at degree {degree}, hbar^{h}")]
    IncompatibleSystem { degree: u32, h: u32 },
    #[error("no nonresonant combination found up to base {base}")]
    ResonanceDetected { base: i64 },
    #[error(transparent)]
    Poly(#[from] PolyError),
}

/// `lambda_i = (N + 1)^(i-1)`: a base-`(N+1)` digit argument shows that
/// `sum lambda_i d_i != 0` whenever `0 < max |d_i| <= N`.
pub fn nonresonant_lambda(n: usize, max_deg: u32) -> Vec<i64> {
    lambda_with_base(n, max_deg as i64 + 1)
}

fn lambda_with_base(n: usize, base: i64) -> Vec<i64> {
    (0..n).map(|i| base.pow(i as u32)).collect()
}

/// One diagonal block of `ad_q` on `P_k`.
#[derive(Clone, Debug)]
struct Block<C> {
    idx: Vec<usize>,
    /// Columns spanning the image of the block.
    image: Mat<C>,
    /// Columns spanning its kernel.
    kernel: Mat<C>,
    /// Inverse of `[A * image | kernel]`.
    t: Mat<C>,
}

/// `ad_q` on `P_k` for a fixed generic `q`, decomposed into blocks.
#[derive(Clone, Debug)]
pub struct AdOperator<C> {
    pub k: u32,
    basis: Vec<Monomial>,
    blocks: Vec<Block<C>>,
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

impl<C: Scalar> AdOperator<C> {
    /// Builds the operator and checks that its kernel commutes with every
    /// `q_i`; `None` signals a resonant `lambda`.
    fn build(q_list: &[PolySymbol<C>], lambda: &[i64], k: u32) -> Result<Option<Self>, PolyError> {
        let n = q_list[0].n();
        let cuts = Cuts::new(k.max(2), 0);
        let q_loc: Vec<PolySymbol<C>> = q_list
            .iter()
            .map(|q| q.h_coeff(0).with_cuts(Cuts::new(2, 0)))
            .collect();
        let mut q = PolySymbol::zero(n, Cuts::new(2, 0));
        for (qi, &l) in q_loc.iter().zip(lambda) {
            q = q.checked_add(&qi.scale_by(&C::from_i64(l)))?;
        }
        let q = q.with_cuts(cuts);
        let basis = phase_basis(n, k);
        let index: HashMap<&Monomial, usize> =
            basis.iter().enumerate().map(|(i, m)| (m, i)).collect();
        // columns: {m_j, q} in the basis
        let mut cols: Vec<Vec<(usize, C)>> = Vec::with_capacity(basis.len());
        for m in &basis {
            let b = poisson(&PolySymbol::monomial(n, cuts, m.clone(), C::one()), &q)?;
            cols.push(b.terms().map(|(mm, c)| (index[mm], c.clone())).collect());
        }
        let mut parent: Vec<usize> = (0..basis.len()).collect();
        for (j, col) in cols.iter().enumerate() {
            for &(i, _) in col {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a] = b;
                }
            }
        }
        let mut groups: HashMap<usize, Vec<usize>> = HashMap::new();
        for i in 0..basis.len() {
            let r = find(&mut parent, i);
            groups.entry(r).or_default().push(i);
        }
        let mut groups: Vec<Vec<usize>> = groups.into_values().collect();
        groups.sort_by_key(|g| g[0]);

        let q_full: Vec<PolySymbol<C>> = q_loc.iter().map(|qi| qi.with_cuts(cuts)).collect();
        let mut blocks = Vec::with_capacity(groups.len());
        for idx in groups {
            let m = idx.len();
            let local: HashMap<usize, usize> =
                idx.iter().enumerate().map(|(a, &g)| (g, a)).collect();
            let mut a = Mat::<C>::zeros(m, m);
            for (jl, &jg) in idx.iter().enumerate() {
                for (ig, c) in &cols[jg] {
                    a[(local[ig], jl)] = c.clone();
                }
            }
            let kernel_vecs = a.nullspace();
            // resonance check: kernel vectors must commute with every q_i
            for v in &kernel_vecs {
                let sym = PolySymbol::from_terms(
                    n,
                    cuts,
                    idx.iter()
                        .zip(v)
                        .map(|(&g, c)| (basis[g].clone(), c.clone())),
                );
                for qi in &q_full {
                    let b = poisson(&sym, qi)?;
                    if !b.is_negligible(sym.scale()) {
                        return Ok(None);
                    }
                }
            }
            let dk = kernel_vecs.len();
            let kernel = Mat::from_fn(m, dk, |i, j| kernel_vecs[j][i].clone());
            let mut red = a.clone();
            let pivots = red.rref();
            let image = Mat::from_fn(m, pivots.len(), |i, j| a[(i, pivots[j])].clone());
            let a_img = a.mul(&image);
            let sq = Mat::from_fn(m, m, |i, j| {
                if j < image.cols() {
                    a_img[(i, j)].clone()
                } else {
                    kernel[(i, j - image.cols())].clone()
                }
            });
            let Some(t) = sq.inverse() else {
                // ker and im overlap: not semisimple for this lambda
                return Ok(None);
            };
            blocks.push(Block {
                idx,
                image,
                kernel,
                t,
            });
        }
        Ok(Some(AdOperator { k, basis, blocks }))
    }

    pub fn basis(&self) -> &[Monomial] {
        &self.basis
    }

    pub fn kernel_dim(&self) -> usize {
        self.blocks.iter().map(|b| b.kernel.cols()).sum()
    }

    /// Splits `g` (coefficients on the basis) as `ad_q(f) + kappa` with `f`
    /// in the image and `kappa` in the kernel; returns `(f, kappa)`.
    pub fn split(&self, g: &[C]) -> (Vec<C>, Vec<C>) {
        let mut f = vec![C::zero(); g.len()];
        let mut kappa = vec![C::zero(); g.len()];
        for b in &self.blocks {
            let gl: Vec<C> = b.idx.iter().map(|&i| g[i].clone()).collect();
            if gl.iter().all(Scalar::is_zero) {
                continue;
            }
            let sol = b.t.mul_vec(&gl);
            let r = b.image.cols();
            let y = &sol[..r];
            let c = &sol[r..];
            let fl = b.image.mul_vec(y);
            let kl = b.kernel.mul_vec(c);
            for (a, &i) in b.idx.iter().enumerate() {
                f[i] = fl[a].clone();
                kappa[i] = kl[a].clone();
            }
        }
        (f, kappa)
    }
}

/// Solver for a fixed list of model quadratics, caching `ad_q` per degree.
#[derive(Clone, Debug)]
pub struct HomologicalSolver<C> {
    q_list: Vec<PolySymbol<C>>,
    lambda: Vec<i64>,
    base: i64,
    ops: HashMap<u32, AdOperator<C>>,
    max_deg: u32,
    noise_scale: f64,
}

/// Bases tried beyond the first before giving up.
const EXTRA_BASES: i64 = 16;

#[derive(Clone, Debug)]
pub struct HomologicalSolution<C> {
    pub f: PolySymbol<C>,
    pub big_f: Vec<PolySymbol<C>>,
    pub residuals: Vec<PolySymbol<C>>,
    pub lambda: Vec<i64>,
    /// A nonzero degree-1 kernel was met (cannot happen for nondegenerate q).
    pub degree_one_kernel: bool,
}

impl<C: Scalar> HomologicalSolver<C> {
    /// Solver with `lambda_i = base^(i-1)`, `base = max_deg + 1` by default.
    pub fn new(q_list: &[PolySymbol<C>], max_deg: u32) -> Self {
        Self::with_base(q_list, max_deg, max_deg as i64 + 1)
    }

    pub fn with_base(q_list: &[PolySymbol<C>], max_deg: u32, base: i64) -> Self {
        HomologicalSolver {
            q_list: q_list.to_vec(),
            lambda: lambda_with_base(q_list.len(), base),
            base,
            ops: HashMap::new(),
            max_deg,
            noise_scale: 0.0,
        }
    }

    /// Float residuals are judged against at least `scale` (the size of the
    /// data the right-hand sides were extracted from).
    pub fn with_noise_scale(mut self, scale: f64) -> Self {
        self.noise_scale = scale;
        self
    }

    pub fn lambda(&self) -> &[i64] {
        &self.lambda
    }

    /// `ad_q` on `P_k`, bumping the base until the kernel is the common one.
    pub fn operator(&mut self, k: u32) -> Result<&AdOperator<C>, HomologicalError> {
        if !self.ops.contains_key(&k) {
            let first = self.base;
            loop {
                if let Some(op) = AdOperator::build(&self.q_list, &self.lambda, k)? {
                    self.ops.insert(k, op);
                    break;
                }
                if self.base >= first + EXTRA_BASES {
                    return Err(HomologicalError::ResonanceDetected { base: self.base });
                }
                // the cache holds operators for the old lambda
                self.base += 1;
                self.lambda = lambda_with_base(self.q_list.len(), self.base);
                self.ops.clear();
            }
        }
        Ok(&self.ops[&k])
    }

    /// Solves `{f, q_i} = g_i - F_i` in every `(degree <= N, hbar^h)` slot.
    pub fn solve(
        &mut self,
        g_list: &[PolySymbol<C>],
    ) -> Result<HomologicalSolution<C>, HomologicalError> {
        assert_eq!(g_list.len(), self.q_list.len(), "one right-hand side per q");
        let n = self.q_list[0].n();
        let cuts = g_list
            .iter()
            .fold(g_list[0].cuts(), |c, g| c.min(&g.cuts()));
        let cuts = Cuts {
            deg: cuts.deg.min(self.max_deg),
            ..cuts
        }
        .min(&cuts);
        let mut slots: Vec<(u32, u32)> = g_list
            .iter()
            .flat_map(PolySymbol::occupied_grades)
            .collect();
        slots.sort_unstable();
        slots.dedup();
        slots.retain(|&(d, h)| cuts.admits_grade(d, h));
        // settle lambda for all degrees first, since a bump resets the cache
        let degrees: Vec<u32> = {
            let mut d: Vec<u32> = slots.iter().map(|s| s.0).collect();
            d.dedup();
            d
        };
        loop {
            let base = self.base;
            for &d in &degrees {
                self.operator(d)?;
            }
            if self.base == base {
                break;
            }
        }
        let mut f = PolySymbol::zero(n, cuts);
        let mut big_f = vec![PolySymbol::zero(n, cuts); g_list.len()];
        let mut degree_one_kernel = false;
        for (d, h) in slots {
            let lambda = self.lambda.clone();
            let op = &self.ops[&d];
            if d == 1 && op.kernel_dim() > 0 {
                degree_one_kernel = true;
            }
            let comps: Vec<Vec<C>> = g_list
                .iter()
                .map(|g| {
                    g.with_cuts(Cuts::new(d, h))
                        .grade_component(d, h)
                        .map(|c| c.coeffs)
                })
                .collect::<Result<_, _>>()?;
            let mut total = vec![C::zero(); op.basis.len()];
            for (v, &l) in comps.iter().zip(&lambda) {
                let lc = C::from_i64(l);
                for (t, x) in total.iter_mut().zip(v) {
                    *t = t.clone() + lc.clone() * x.clone();
                }
            }
            let (fv, _) = op.split(&total);
            for (m, c) in op.basis.iter().zip(fv) {
                f.add_term(m.with_h(h), c);
            }
            for (i, v) in comps.iter().enumerate() {
                let (_, kappa) = op.split(v);
                for (m, c) in op.basis.iter().zip(kappa) {
                    big_f[i].add_term(m.with_h(h), c);
                }
            }
        }
        let mut residuals = Vec::with_capacity(g_list.len());
        for ((qi, gi), fi) in self.q_list.iter().zip(g_list).zip(&big_f) {
            let r = poisson(&f, &qi.with_cuts(cuts))?
                .checked_sub(&gi.with_cuts(cuts))?
                .checked_add(fi)?;
            let scale = gi.scale().max(self.noise_scale);
            if let Some((m, _)) = r.terms().find(|(_, c)| !c.negligible(scale)) {
                return Err(HomologicalError::IncompatibleSystem {
                    degree: m.degree(),
                    h: m.h(),
                });
            }
            residuals.push(r);
        }
        Ok(HomologicalSolution {
            f,
            big_f,
            residuals,
            lambda: self.lambda.clone(),
            degree_one_kernel,
        })
    }
}

/// One-shot form of [`HomologicalSolver::solve`].
pub fn solve_homological<C: Scalar>(
    q_list: &[PolySymbol<C>],
    g_list: &[PolySymbol<C>],
    max_deg: u32,
) -> Result<HomologicalSolution<C>, HomologicalError> {
    HomologicalSolver::new(q_list, max_deg).solve(g_list)
}

/// `{g_i, q_j} = {g_j, q_i}` for all pairs.
pub fn check_compatibility<C: Scalar>(g_list: &[PolySymbol<C>], q_list: &[PolySymbol<C>]) -> bool {
    let scale = g_list.iter().map(PolySymbol::scale).fold(0.0, f64::max);
    check_compatibility_at(g_list, q_list, scale)
}

/// [`check_compatibility`] with float noise judged against `scale`.
pub fn check_compatibility_at<C: Scalar>(
    g_list: &[PolySymbol<C>],
    q_list: &[PolySymbol<C>],
    scale: f64,
) -> bool {
    for i in 0..g_list.len() {
        for j in i + 1..g_list.len() {
            let (Ok(a), Ok(b)) = (
                poisson(&g_list[i], &q_list[j]),
                poisson(&g_list[j], &q_list[i]),
            ) else {
                return false;
            };
            if !(&a - &b).is_negligible(scale) {
                return false;
            }
        }
    }
    true
}

/// Basis of the common kernel of the `ad_{q_i}` on `P_k`: the expansions of
/// the `q^gamma` with `2|gamma| = k`, graded-lex in `gamma`. The dimension is
/// checked against the null space of `ad_q`.
pub fn kernel_basis<C: Scalar>(
    q_list: &[PolySymbol<C>],
    k: u32,
) -> Result<Vec<GradedComponent<C>>, HomologicalError> {
    let nq = q_list.len();
    let n = q_list[0].n();
    let mut solver = HomologicalSolver::new(q_list, k.max(1));
    let dim = solver.operator(k)?.kernel_dim();
    let gammas = if k.is_multiple_of(2) {
        crate::poly::exponent_vectors(nq, k / 2)
    } else {
        Vec::new()
    };
    assert_eq!(
        dim,
        gammas.len(),
        "kernel of ad_q on P_{k} is not spanned by products of the q_j"
    );
    let cuts = Cuts::new(k, 0);
    let out = gammas
        .iter()
        .map(|g| {
            let mut p = PolySymbol::constant(n, cuts, C::one());
            for (qj, &e) in q_list.iter().zip(g) {
                for _ in 0..e {
                    p = &p * &qj.with_cuts(cuts);
                }
            }
            p.grade_component(k, 0)
        })
        .collect::<Result<_, _>>()?;
    Ok(out)
}
