//! Relativistic one-electron dynamics in a finite basis of cubic Hermite splines.
//!
//! The crate solves the stationary and time-dependent Dirac equation for an
//! electron in the field of two nuclei, one at rest (the target) and one
//! moving along a straight line (the projectile). Three geometries share the
//! same machinery:
//!
//! * [`monopole`]: the radial equation with the projectile potential reduced
//!   to its spherically symmetric part about the target,
//! * [`axial`]: a head-on cylindrical reduction with a fixed angular momentum
//!   projection `m`,
//! * [`cartesian`]: the full three-dimensional problem on a tensor lattice.
//!
//! All of them expand the wave function in the piecewise cubic Hermite
//! splines of [`grid_basis`], which leads to the matrix equation
//! `i S dC/dt = H(t) C` with a non-orthogonal overlap `S`. Time stepping uses
//! the Crank-Nicolson scheme from [`linalg`], which conserves `C^H S C`
//! exactly for Hermitian `H`.
//!
//! Atomic units are used internally. Lengths given in femtometres are
//! converted once at the boundary via [`units`].

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord, clippy::manual_is_multiple_of)]

pub mod axial;
pub mod cartesian;
pub mod checkpoint;
mod error;
pub mod fields;
pub mod grid_basis;
pub mod linalg;
pub mod monopole;
pub mod propagation;
pub mod tensor;
pub mod units;

pub use error::{Error, Result};
pub use num_complex::Complex64;
