//! Linear algebra for the propagators.
//!
//! Matrices in a spline basis are banded in 1D and Kronecker-structured on
//! tensor grids. This module provides band storage with LU and Cholesky
//! factors, a compressed sparse row type for explicitly assembled operators,
//! the generalized Hermitian eigenproblem `H v = e S v`, a preconditioned
//! BiCGSTAB for complex systems, factor-wise operations with `S_x (x) S_y (x) S_z`,
//! and the Crank-Nicolson step
//!
//! ```text
//! [S + i dt/2 H(t + dt/2)] C(t + dt) = [S - i dt/2 H(t + dt/2)] C(t)
//! ```
//!
//! which keeps `C^H S C` constant whenever `H` is Hermitian.

pub mod banded;
pub mod bicgstab;
pub mod cn;
pub mod eigen;
pub mod kron;
pub mod sparse;

pub use banded::{BandedCholesky, BandedLu, BandedMatrix, BandedRealMatrix, Scalar};
pub use bicgstab::{
    bicgstab_solve, BicgstabOptions, IdentityPreconditioner, LinearOperator, Preconditioner,
    SolveReport,
};
pub use cn::{cn_step, cn_transfer_matrix, CNStepReport, CnPropagator};
pub use eigen::{shift_invert, solve_generalized_eig, GeneralizedEigen, ShiftInvertOptions};
pub use kron::{apply_axis, kron_apply_inverse, KroneckerOverlap, TensorShape};
pub use sparse::SparseMatrix;

use num_complex::Complex64;
use rayon::prelude::*;

const DOT_CHUNK: usize = 4096;

/// `x^H y`, summed in fixed chunks so the result does not depend on scheduling.
pub fn dot(x: &[Complex64], y: &[Complex64]) -> Complex64 {
    assert_eq!(x.len(), y.len());
    x.par_chunks(DOT_CHUNK)
        .zip(y.par_chunks(DOT_CHUNK))
        .map(|(a, b)| {
            a.iter()
                .zip(b)
                .fold(Complex64::new(0.0, 0.0), |acc, (u, v)| acc + u.conj() * v)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .sum()
}

/// Euclidean norm, deterministic like [`dot`].
pub fn norm2(x: &[Complex64]) -> f64 {
    x.par_chunks(DOT_CHUNK)
        .map(|a| a.iter().map(|v| v.norm_sqr()).sum::<f64>())
        .collect::<Vec<_>>()
        .into_iter()
        .sum::<f64>()
        .sqrt()
}
