use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use super::banded::{BandedMatrix, Scalar};
use super::bicgstab::LinearOperator;
use crate::{Error, Result};

/// Square matrix in compressed sparse row form with sorted, unique columns.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix<T> {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<T>,
}

impl<T: Scalar + Send + Sync> SparseMatrix<T> {
    /// Builds the matrix from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, T)>) -> Result<Self> {
        if let Some(&(i, j, _)) = triplets.iter().find(|(i, j, _)| *i >= n || *j >= n) {
            return Err(Error::InvalidArgument(format!(
                "entry ({i}, {j}) outside a {n} x {n} matrix"
            )));
        }
        triplets.par_sort_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0; n + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<T> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in triplets {
            if last == Some((i, j)) {
                *vals.last_mut().expect("previous entry") += v;
            } else {
                cols.push(j);
                vals.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(Self {
            n,
            row_ptr,
            cols,
            vals,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[r.clone()].binary_search(&j) {
            Ok(k) => self.vals[r.start + k],
            Err(_) => T::zero(),
        }
    }

    pub fn mul_vec_into(&self, x: &[T], y: &mut [T]) {
        assert_eq!(x.len(), self.n);
        y.par_iter_mut().enumerate().for_each(|(i, yi)| {
            *yi = self.row(i).fold(T::zero(), |acc, (j, a)| acc + a * x[j]);
        });
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::zero(); self.n];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn to_dense(&self) -> DMatrix<T> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                m[(i, j)] = v;
            }
        }
        m
    }

    /// Largest `|A_ij - conj(A_ji)|` over the stored pattern.
    pub fn hermiticity_defect(&self) -> f64 {
        (0..self.n)
            .into_par_iter()
            .map(|i| {
                self.row(i)
                    .map(|(j, a)| (a - self.get(j, i).conjugate()).modulus())
                    .fold(0.0, f64::max)
            })
            .reduce(|| 0.0, f64::max)
    }

    /// Copies the matrix into band storage wide enough for its pattern.
    pub fn to_banded(&self) -> BandedMatrix<T> {
        let (mut kl, mut ku) = (0, 0);
        for i in 0..self.n {
            for (j, _) in self.row(i) {
                kl = kl.max(i.saturating_sub(j));
                ku = ku.max(j.saturating_sub(i));
            }
        }
        let mut b = BandedMatrix::zeros(self.n, kl, ku);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                b.set(i, j, v);
            }
        }
        b
    }
}

impl LinearOperator for SparseMatrix<Complex64> {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        self.mul_vec_into(x, y);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_are_merged_and_sorted() {
        let m = SparseMatrix::from_triplets(
            3,
            vec![(2, 0, 1.0), (0, 1, 2.0), (0, 1, 3.0), (1, 1, -1.0), (0, 0, 4.0)],
        )
        .unwrap();
        assert_eq!(m.nnz(), 4);
        assert_eq!(m.get(0, 1), 5.0);
        assert_eq!(m.get(2, 2), 0.0);
        assert_eq!(m.mul_vec(&[1.0, 1.0, 1.0]), vec![9.0, -1.0, 1.0]);
        let b = m.to_banded();
        assert_eq!(b.to_dense(), m.to_dense());
    }

    #[test]
    fn out_of_range_entry() {
        assert!(SparseMatrix::from_triplets(2, vec![(0, 2, 1.0)]).is_err());
    }

    #[test]
    fn hermiticity_defect() {
        let i = Complex64::new(0.0, 1.0);
        let m = SparseMatrix::from_triplets(2, vec![(0, 1, i), (1, 0, -i)]).unwrap();
        assert_eq!(m.hermiticity_defect(), 0.0);
        let m = SparseMatrix::from_triplets(2, vec![(0, 1, i), (1, 0, i)]).unwrap();
        assert!((m.hermiticity_defect() - 2.0).abs() < 1e-15);
    }
}
