//! Band-stored matrices with LU and Cholesky factorizations.

use nalgebra::{ComplexField, DMatrix};
use num_complex::Complex64;

use crate::{Error, Result};

/// Scalars the banded and sparse kernels work with (`f64` and `Complex64`).
pub trait Scalar: ComplexField<RealField = f64> + Copy {}
impl<T: ComplexField<RealField = f64> + Copy> Scalar for T {}

/// Square matrix with `kl` sub- and `ku` super-diagonals, stored row by row.
///
/// Row `i` holds the columns `i - kl ..= i + ku`; entries outside the band are
/// identically zero and cannot be written.
#[derive(Clone, Debug, PartialEq)]
pub struct BandedMatrix<T> {
    n: usize,
    kl: usize,
    ku: usize,
    data: Vec<T>,
}

pub type BandedRealMatrix = BandedMatrix<f64>;

impl<T: Scalar> BandedMatrix<T> {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        Self {
            n,
            kl,
            ku,
            data: vec![T::zero(); n * (kl + ku + 1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn lower_bandwidth(&self) -> usize {
        self.kl
    }

    pub fn upper_bandwidth(&self) -> usize {
        self.ku
    }

    fn width(&self) -> usize {
        self.kl + self.ku + 1
    }

    fn in_band(&self, i: usize, j: usize) -> bool {
        i < self.n && j < self.n && j + self.kl >= i && j <= i + self.ku
    }

    #[inline]
    fn offset(&self, i: usize, j: usize) -> usize {
        i * self.width() + (j + self.kl - i)
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        if self.in_band(i, j) {
            self.data[self.offset(i, j)]
        } else {
            T::zero()
        }
    }

    /// Adds `value` to entry `(i, j)`; panics if the entry lies outside the band.
    pub fn add(&mut self, i: usize, j: usize, value: T) {
        assert!(self.in_band(i, j), "entry ({i}, {j}) outside the band");
        let k = self.offset(i, j);
        self.data[k] += value;
    }

    pub fn set(&mut self, i: usize, j: usize, value: T) {
        assert!(self.in_band(i, j), "entry ({i}, {j}) outside the band");
        let k = self.offset(i, j);
        self.data[k] = value;
    }

    /// Iterates the stored band of row `i` as `(column, value)`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let lo = i.saturating_sub(self.kl);
        let hi = (i + self.ku).min(self.n - 1);
        (lo..=hi).map(move |j| (j, self.data[self.offset(i, j)]))
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.n);
        (0..self.n)
            .map(|i| self.row(i).fold(T::zero(), |acc, (j, a)| acc + a * x[j]))
            .collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.n, self.ku, self.kl);
        for i in 0..self.n {
            for (j, a) in self.row(i) {
                t.set(j, i, a);
            }
        }
        t
    }

    /// Returns `self + alpha * other`, widening the band if needed.
    pub fn add_scaled(&self, alpha: T, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        let mut out = Self::zeros(self.n, self.kl.max(other.kl), self.ku.max(other.ku));
        for i in 0..self.n {
            for (j, a) in self.row(i) {
                out.add(i, j, a);
            }
            for (j, b) in other.row(i) {
                out.add(i, j, alpha * b);
            }
        }
        out
    }

    pub fn scale(&mut self, alpha: T) {
        for v in &mut self.data {
            *v *= alpha;
        }
    }

    pub fn to_dense(&self) -> DMatrix<T> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, a) in self.row(i) {
                m[(i, j)] = a;
            }
        }
        m
    }

    /// Largest `|A_ij - conj(A_ji)|` over the band.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for (j, a) in self.row(i) {
                worst = worst.max((a - self.get(j, i).conjugate()).modulus());
            }
        }
        worst
    }

    /// LU factorization with partial pivoting.
    pub fn lu(&self) -> Result<BandedLu<T>> {
        BandedLu::factor(self)
    }
}

impl BandedMatrix<f64> {
    /// Real matrix applied to a complex vector.
    pub fn mul_complex(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![Complex64::new(0.0, 0.0); self.n];
        self.mul_complex_into(x, &mut y);
        y
    }

    pub fn mul_complex_into(&self, x: &[Complex64], y: &mut [Complex64]) {
        assert_eq!(x.len(), self.n);
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.row(i).fold(Complex64::new(0.0, 0.0), |acc, (j, a)| acc + x[j] * a);
        }
    }

    pub fn to_complex(&self) -> BandedMatrix<Complex64> {
        BandedMatrix {
            n: self.n,
            kl: self.kl,
            ku: self.ku,
            data: self.data.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        }
    }

    /// Cholesky factorization `A = L L^T` of a symmetric positive definite band.
    pub fn cholesky(&self) -> Result<BandedCholesky> {
        BandedCholesky::factor(self)
    }
}

/// Band LU factors in the layout of LAPACK's `gbtrf`: the upper factor gains
/// `kl` extra super-diagonals of fill from row interchanges.
#[derive(Clone, Debug)]
pub struct BandedLu<T> {
    n: usize,
    kl: usize,
    ku: usize,
    data: Vec<T>,
    pivots: Vec<usize>,
}

impl<T: Scalar> BandedLu<T> {
    fn factor(a: &BandedMatrix<T>) -> Result<Self> {
        let n = a.n;
        let kl = a.kl;
        let ku = a.kl + a.ku;
        let width = kl + ku + 1;
        let mut data = vec![T::zero(); n * width];
        for i in 0..n {
            for (j, v) in a.row(i) {
                data[i * width + (j + kl - i)] = v;
            }
        }
        let idx = |i: usize, j: usize| i * width + (j + kl - i);
        let mut pivots = vec![0; n];
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let last_col = (k + ku).min(n - 1);
            let mut p = k;
            let mut best = data[idx(k, k)].modulus();
            for i in k + 1..=last_row {
                let m = data[idx(i, k)].modulus();
                if m > best {
                    best = m;
                    p = i;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(Error::Singular(k));
            }
            pivots[k] = p;
            if p != k {
                for j in k..=last_col {
                    data.swap(idx(k, j), idx(p, j));
                }
            }
            let pivot = data[idx(k, k)];
            let inv = T::one() / pivot;
            for i in k + 1..=last_row {
                let l = data[idx(i, k)] * inv;
                data[idx(i, k)] = l;
                if l == T::zero() {
                    continue;
                }
                let (src, dst) = (idx(k, k + 1), idx(i, k + 1));
                let len = last_col - k;
                // rows k and i are contiguous over columns k+1..=last_col
                let (head, tail) = data.split_at_mut(dst);
                let row_k = &head[src..src + len];
                for (d, &s) in tail[..len].iter_mut().zip(row_k) {
                    *d -= l * s;
                }
            }
        }
        Ok(Self {
            n,
            kl,
            ku,
            data,
            pivots,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve_in_place(&self, b: &mut [T]) {
        assert_eq!(b.len(), self.n);
        let width = self.kl + self.ku + 1;
        let idx = |i: usize, j: usize| i * width + (j + self.kl - i);
        for k in 0..self.n {
            let p = self.pivots[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            for i in k + 1..=(k + self.kl).min(self.n - 1) {
                b[i] -= self.data[idx(i, k)] * bk;
            }
        }
        for k in (0..self.n).rev() {
            let mut s = b[k];
            for j in k + 1..=(k + self.ku).min(self.n - 1) {
                s -= self.data[idx(k, j)] * b[j];
            }
            b[k] = s / self.data[idx(k, k)];
        }
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

/// Lower band factor of a real symmetric positive definite matrix.
#[derive(Clone, Debug)]
pub struct BandedCholesky {
    n: usize,
    w: usize,
    /// Row `i` stores `L[i, i-w ..= i]`.
    data: Vec<f64>,
}

impl BandedCholesky {
    fn factor(a: &BandedMatrix<f64>) -> Result<Self> {
        let n = a.n;
        let w = a.kl.max(a.ku);
        let width = w + 1;
        let mut data = vec![0.0; n * width];
        let at = |i: usize, j: usize| i * width + (j + w - i);
        for i in 0..n {
            for j in i.saturating_sub(w)..=i {
                let mut s = a.get(i, j);
                for k in i.saturating_sub(w).max(j.saturating_sub(w))..j {
                    s -= data[at(i, k)] * data[at(j, k)];
                }
                if i == j {
                    if !(s > 0.0) {
                        return Err(Error::NotPositiveDefinite { index: i, pivot: s });
                    }
                    data[at(i, i)] = s.sqrt();
                } else {
                    data[at(i, j)] = s / data[at(j, j)];
                }
            }
        }
        Ok(Self { n, w, data })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn l(&self, i: usize, j: usize) -> f64 {
        self.data[i * (self.w + 1) + (j + self.w - i)]
    }

    /// Solves `A x = b` for a complex right-hand side in place.
    pub fn solve_complex_in_place(&self, b: &mut [Complex64]) {
        assert_eq!(b.len(), self.n);
        for i in 0..self.n {
            let mut s = b[i];
            for k in i.saturating_sub(self.w)..i {
                s -= b[k] * self.l(i, k);
            }
            b[i] = s / self.l(i, i);
        }
        for i in (0..self.n).rev() {
            let mut s = b[i];
            for k in i + 1..(i + self.w + 1).min(self.n) {
                s -= b[k] * self.l(k, i);
            }
            b[i] = s / self.l(i, i);
        }
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        assert_eq!(b.len(), self.n);
        for i in 0..self.n {
            let mut s = b[i];
            for k in i.saturating_sub(self.w)..i {
                s -= b[k] * self.l(i, k);
            }
            b[i] = s / self.l(i, i);
        }
        for i in (0..self.n).rev() {
            let mut s = b[i];
            for k in i + 1..(i + self.w + 1).min(self.n) {
                s -= b[k] * self.l(k, i);
            }
            b[i] = s / self.l(i, i);
        }
    }
}
