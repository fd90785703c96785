use nalgebra::{DMatrix, SymmetricEigen};

use super::banded::{BandedRealMatrix, Scalar};
use crate::{Error, Result};

/// Solution of `H v = e S v` with `v_i^H S v_j = delta_ij`.
#[derive(Clone, Debug)]
pub struct GeneralizedEigen<T: Scalar> {
    /// Ascending.
    pub values: Vec<f64>,
    /// Column `i` belongs to `values[i]`.
    pub vectors: DMatrix<T>,
}

/// Dense generalized Hermitian eigenproblem via the Cholesky factor of `S`.
pub fn solve_generalized_eig<T: Scalar>(h: &DMatrix<T>, s: &DMatrix<T>) -> Result<GeneralizedEigen<T>> {
    let n = h.nrows();
    if h.ncols() != n || s.nrows() != n || s.ncols() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: s.nrows(),
        });
    }
    let chol = nalgebra::Cholesky::new(s.clone()).ok_or_else(|| {
        let (index, pivot) = first_bad_pivot(s);
        Error::NotPositiveDefinite { index, pivot }
    })?;
    let l = chol.l();
    // A = L^-1 H L^-H
    let y = l
        .solve_lower_triangular(h)
        .ok_or_else(|| Error::Eigen("triangular solve failed".into()))?;
    let a = l
        .solve_lower_triangular(&y.adjoint())
        .ok_or_else(|| Error::Eigen("triangular solve failed".into()))?;
    let a = (&a + a.adjoint()) * T::from_real(0.5);
    let eig = SymmetricEigen::try_new(a, f64::EPSILON, 0)
        .ok_or_else(|| Error::Eigen("symmetric QR did not converge".into()))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let sorted = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    let vectors = l
        .adjoint()
        .solve_upper_triangular(&sorted)
        .ok_or_else(|| Error::Eigen("triangular solve failed".into()))?;
    Ok(GeneralizedEigen { values, vectors })
}

fn first_bad_pivot<T: Scalar>(s: &DMatrix<T>) -> (usize, f64) {
    let n = s.nrows();
    let mut l = DMatrix::<T>::zeros(n, n);
    for j in 0..n {
        let mut d = s[(j, j)].real();
        for k in 0..j {
            d -= l[(j, k)].modulus_squared();
        }
        if !(d > 0.0) {
            return (j, d);
        }
        let d = d.sqrt();
        l[(j, j)] = T::from_real(d);
        for i in j + 1..n {
            let mut v = s[(i, j)];
            for k in 0..j {
                v -= l[(i, k)] * l[(j, k)].conjugate();
            }
            l[(i, j)] = v / T::from_real(d);
        }
    }
    (n, f64::NAN)
}

#[derive(Clone, Copy, Debug)]
pub struct ShiftInvertOptions {
    /// Stop when `|H x - e S x| <= tol |e| |S x|`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for ShiftInvertOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 200,
        }
    }
}

/// Eigenpair of `H x = e S x` closest to `sigma`, by inverse iteration with
/// the band LU of `H - sigma S` and a Rayleigh quotient for the energy.
///
/// `x` holds the start vector on entry and the S-normalized eigenvector on
/// return.
pub fn shift_invert(
    h: &BandedRealMatrix,
    s: &BandedRealMatrix,
    sigma: f64,
    x: &mut [f64],
    opts: &ShiftInvertOptions,
) -> Result<f64> {
    let n = h.dim();
    if s.dim() != n || x.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: x.len(),
        });
    }
    let shifted = h.add_scaled(-sigma, s);
    let lu = shifted.lu()?;
    let dotr = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(u, v)| u * v).sum::<f64>();
    let mut energy = f64::NAN;
    let mut residual = f64::INFINITY;
    for _ in 0..opts.max_iter {
        let sx = s.mul_vec(x);
        let mut y = sx;
        lu.solve_in_place(&mut y);
        let sy = s.mul_vec(&y);
        let norm = dotr(&y, &sy).sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::Eigen("inverse iteration produced a null vector".into()));
        }
        for (xi, yi) in x.iter_mut().zip(&y) {
            *xi = yi / norm;
        }
        let hx = h.mul_vec(x);
        let sx = s.mul_vec(x);
        energy = dotr(x, &hx);
        let r: f64 = hx
            .iter()
            .zip(&sx)
            .map(|(a, b)| (a - energy * b).powi(2))
            .sum::<f64>()
            .sqrt();
        let scale = energy.abs().max(1.0) * dotr(&sx, &sx).sqrt();
        residual = r / scale;
        if residual <= opts.tol {
            return Ok(energy);
        }
    }
    Err(Error::Eigen(format!(
        "inverse iteration stalled at e = {energy}, relative residual {residual:e}"
    )))
}
