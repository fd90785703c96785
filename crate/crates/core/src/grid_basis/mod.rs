//! One-dimensional grids and the cubic Hermite spline basis.
//!
//! Every interior node `x_a` (`a = 1..N-1`) carries two splines: `s0_a` with
//! unit value and zero slope at `x_a`, and `s1_a` with zero value and unit
//! slope. Both vanish outside `(x_{a-1}, x_{a+1})`. The boundary nodes carry no
//! functions, so every expansion vanishes together with its derivative at
//! both ends of the grid.
//!
//! Basis functions are numbered `2 (a - 1) + kind`, which makes all matrices
//! banded with half-bandwidth 3.

mod assembly;
mod grid;
mod hermite;
mod quadrature;

pub use assembly::{
    assemble_bilinear, assemble_first_derivative, assemble_overlap, assemble_partial_overlap,
    assemble_weighted, assemble_weighted_split, DEFAULT_QUADRATURE_ORDER,
};
pub use grid::{Grid1D, GridKind};
pub use hermite::{eval_spline, evaluate, interpolate, local_shape, SplineId, SplineKind};
pub use quadrature::GaussLegendre;

pub use crate::linalg::banded::BandedRealMatrix;

/// Half-bandwidth of every one-dimensional Galerkin matrix.
pub const HALF_BANDWIDTH: usize = 3;
