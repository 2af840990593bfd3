//! Small dense matrices over any [`Scalar`], with Gaussian elimination.
//!
//! Exact fields pivot on the first nonzero entry; floats use partial
//! pivoting with a relative zero threshold.

use std::fmt;
use std::ops::{Index, IndexMut};

use crate::scalar::{ComplexScalar, RealScalar, Scalar, ScalarParseError, FLOAT_ZERO_TOL};

#[derive(Clone, PartialEq)]
pub struct Mat<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: fmt::Debug> fmt::Debug for Mat<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<&[T]> = self.data.chunks(self.cols.max(1)).collect();
        f.debug_struct("Mat")
            .field("rows", &self.rows)
            .field("cols", &self.cols)
            .field("data", &rows)
            .finish()
    }
}

impl<T> Index<(usize, usize)> for Mat<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Mat<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

impl<T: Scalar> Mat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Mat {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Mat { rows, cols, data }
    }

    pub fn from_i64(rows: &[&[i64]]) -> Self {
        Self::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&v| T::from_i64(v)).collect())
                .collect(),
        )
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)].clone()).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> Mat<U> {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].clone())
    }

    pub fn mul(&self, other: &Mat<T>) -> Mat<T> {
        assert_eq!(self.cols, other.rows, "matrix product shape mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = &other[(k, j)];
                    if b.is_zero() {
                        continue;
                    }
                    let v = out[(i, j)].clone() + a.clone() * b.clone();
                    out[(i, j)] = v;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .fold(T::zero(), |acc, (a, b)| acc + a.clone() * b.clone())
            })
            .collect()
    }

    pub fn add(&self, other: &Mat<T>) -> Mat<T> {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a.clone() + b.clone())
                .collect(),
        }
    }

    pub fn sub(&self, other: &Mat<T>) -> Mat<T> {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a.clone() - b.clone())
                .collect(),
        }
    }

    pub fn scale(&self, s: &T) -> Mat<T> {
        self.map(|a| a.clone() * s.clone())
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(Scalar::magnitude).fold(0.0, f64::max)
    }

    pub fn is_zero_within(&self, tol: f64) -> bool {
        if T::is_exact() {
            self.data.iter().all(Scalar::is_zero)
        } else {
            self.max_abs() <= tol
        }
    }

    /// Reduced row echelon form; returns the pivot columns.
    pub fn rref(&mut self) -> Vec<usize> {
        self.rref_limited(self.cols)
    }

    /// Row reduction that only picks pivots among the first `limit` columns;
    /// later columns are carried along.
    fn rref_limited(&mut self, limit: usize) -> Vec<usize> {
        let tol = if T::is_exact() {
            0.0
        } else {
            FLOAT_ZERO_TOL * self.max_abs().max(1.0)
        };
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..limit {
            if r == self.rows {
                break;
            }
            let mut best = None;
            let mut best_mag = 0.0;
            for i in r..self.rows {
                let v = &self[(i, c)];
                if v.is_zero() {
                    continue;
                }
                if T::is_exact() {
                    best = Some(i);
                    break;
                }
                let m = v.magnitude();
                if m <= tol {
                    continue;
                }
                if best.is_none() || m > best_mag {
                    best = Some(i);
                    best_mag = m;
                }
            }
            let Some(p) = best else {
                if !T::is_exact() {
                    for i in r..self.rows {
                        self[(i, c)] = T::zero();
                    }
                }
                continue;
            };
            self.swap_rows(r, p);
            let inv = T::one() / self[(r, c)].clone();
            for j in c..self.cols {
                let v = self[(r, j)].clone() * inv.clone();
                self[(r, j)] = v;
            }
            for i in 0..self.rows {
                if i == r {
                    continue;
                }
                let f = self[(i, c)].clone();
                if f.is_zero() {
                    continue;
                }
                for j in c..self.cols {
                    let rv = self[(r, j)].clone();
                    if rv.is_zero() {
                        continue;
                    }
                    let v = self[(i, j)].clone() - f.clone() * rv;
                    self[(i, j)] = v;
                }
                self[(i, c)] = T::zero();
            }
            pivots.push(c);
            r += 1;
        }
        pivots
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    pub fn rank(&self) -> usize {
        self.clone().rref().len()
    }

    /// Basis of the right null space, one vector per free column, with a 1 in
    /// that free position.
    pub fn nullspace(&self) -> Vec<Vec<T>> {
        let mut m = self.clone();
        let pivots = m.rref();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        free.iter()
            .map(|&f| {
                let mut v = vec![T::zero(); self.cols];
                v[f] = T::one();
                for (r, &pc) in pivots.iter().enumerate() {
                    v[pc] = -m[(r, f)].clone();
                }
                v
            })
            .collect()
    }

    /// Some solution of `self * x = b`, free variables set to zero.
    pub fn solve(&self, b: &[T]) -> Option<Vec<T>> {
        self.solve_at(b, 0.0)
    }

    /// [`Mat::solve`] where a float inconsistency must exceed noise relative
    /// to at least `noise_scale` to count.
    pub fn solve_at(&self, b: &[T], noise_scale: f64) -> Option<Vec<T>> {
        assert_eq!(b.len(), self.rows);
        let mut aug = Self::from_fn(self.rows, self.cols + 1, |i, j| {
            if j < self.cols {
                self[(i, j)].clone()
            } else {
                b[i].clone()
            }
        });
        let bscale = b.iter().map(Scalar::magnitude).fold(noise_scale, f64::max);
        let pivots = aug.rref_limited(self.cols);
        for i in pivots.len()..self.rows {
            if !aug[(i, self.cols)].negligible(bscale.max(self.max_abs())) {
                return None;
            }
        }
        let mut x = vec![T::zero(); self.cols];
        for (r, &pc) in pivots.iter().enumerate() {
            x[pc] = aug[(r, self.cols)].clone();
        }
        Some(x)
    }

    pub fn inverse(&self) -> Option<Mat<T>> {
        assert!(self.is_square());
        let n = self.rows;
        let mut aug = Self::from_fn(n, 2 * n, |i, j| {
            if j < n {
                self[(i, j)].clone()
            } else if j - n == i {
                T::one()
            } else {
                T::zero()
            }
        });
        let pivots = aug.rref();
        if pivots.len() < n || pivots[n - 1] != n - 1 {
            return None;
        }
        Some(Self::from_fn(n, n, |i, j| aug[(i, j + n)].clone()))
    }

    pub fn det(&self) -> T {
        assert!(self.is_square());
        let n = self.rows;
        let mut m = self.clone();
        let mut det = T::one();
        for c in 0..n {
            let Some(p) = (c..n).find(|&i| !m[(i, c)].is_zero()) else {
                return T::zero();
            };
            if p != c {
                m.swap_rows(p, c);
                det = -det;
            }
            let piv = m[(c, c)].clone();
            det = det * piv.clone();
            for i in c + 1..n {
                let f = m[(i, c)].clone() / piv.clone();
                if f.is_zero() {
                    continue;
                }
                for j in c..n {
                    let v = m[(i, j)].clone() - f.clone() * m[(c, j)].clone();
                    m[(i, j)] = v;
                }
            }
        }
        det
    }
}

impl<T: Scalar> Mat<T> {
    /// Row-major nested JSON arrays.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::Value::Array(
            self.data
                .chunks(self.cols.max(1))
                .map(|r| serde_json::Value::Array(r.iter().map(Scalar::to_json).collect()))
                .collect(),
        )
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self, ScalarParseError> {
        let bad = || ScalarParseError::Invalid(v.to_string());
        let rows = v.as_array().ok_or_else(bad)?;
        let parsed = rows
            .iter()
            .map(|r| {
                r.as_array()
                    .ok_or_else(bad)?
                    .iter()
                    .map(T::from_json)
                    .collect::<Result<Vec<T>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        let cols = parsed.first().map_or(0, Vec::len);
        if parsed.iter().any(|r| r.len() != cols) {
            return Err(bad());
        }
        Ok(Self::from_rows(parsed))
    }
}

impl<R: RealScalar> Mat<R> {
    pub fn complexify(&self) -> Mat<R::Cplx> {
        self.map(|v| v.complexify())
    }

    pub fn to_f64(&self) -> Mat<f64> {
        self.map(|v| v.to_f64())
    }
}

impl<C: ComplexScalar> Mat<C> {
    pub fn re(&self) -> Mat<C::Real> {
        self.map(|v| v.re())
    }
}

/// The standard symplectic matrix `J = [[0, I], [-I, 0]]` in `(x, xi)` order.
pub fn standard_j<T: Scalar>(n: usize) -> Mat<T> {
    Mat::from_fn(2 * n, 2 * n, |i, j| {
        if j == i + n {
            T::one()
        } else if i == j + n {
            -T::one()
        } else {
            T::zero()
        }
    })
}
