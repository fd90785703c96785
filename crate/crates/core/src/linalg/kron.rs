use num_complex::Complex64;
use rayon::prelude::*;

use super::banded::{BandedCholesky, BandedRealMatrix};
use super::bicgstab::Preconditioner;
use crate::{Error, Result};

type C = Complex64;

/// Layout of a spinor field on a tensor basis.
///
/// The flat index of basis tuple `(i_0, .., i_{d-1})` and component `k` is
/// `((i_0 n_1 + i_1) n_2 + ..) * components + k`: the first axis varies
/// slowest and the spinor components fastest.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TensorShape {
    pub dims: Vec<usize>,
    pub components: usize,
}

impl TensorShape {
    pub fn new(dims: Vec<usize>, components: usize) -> Self {
        Self { dims, components }
    }

    /// Number of spatial basis tuples.
    pub fn spatial_len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn len(&self) -> usize {
        self.spatial_len() * self.components
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Stride (in flat indices) of one step along `axis`.
    pub fn stride(&self, axis: usize) -> usize {
        self.dims[axis + 1..].iter().product::<usize>() * self.components
    }
}

/// Applies `op` to every pencil along `axis`, in place.
///
/// A pencil is the `dims[axis]` entries that differ only in the index along
/// `axis`. Independent outer blocks are processed in parallel.
pub fn apply_axis<F>(shape: &TensorShape, axis: usize, x: &mut [C], op: F)
where
    F: Fn(&mut [C]) + Sync,
{
    assert_eq!(x.len(), shape.len());
    let n = shape.dims[axis];
    let inner = shape.stride(axis);
    x.par_chunks_mut(n * inner).for_each(|block| {
        let mut pencil = vec![C::new(0.0, 0.0); n];
        for r in 0..inner {
            for (i, p) in pencil.iter_mut().enumerate() {
                *p = block[i * inner + r];
            }
            op(&mut pencil);
            for (i, p) in pencil.iter().enumerate() {
                block[i * inner + r] = *p;
            }
        }
    });
}


/// Overlap `S_0 (x) S_1 (x) .. (x) I_components` kept in factored form.
#[derive(Clone, Debug)]
pub struct KroneckerOverlap {
    shape: TensorShape,
    factors: Vec<BandedRealMatrix>,
    cholesky: Vec<BandedCholesky>,
}

impl KroneckerOverlap {
    pub fn new(factors: Vec<BandedRealMatrix>, components: usize) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::InvalidArgument("no Kronecker factors".into()));
        }
        let cholesky = factors.iter().map(|f| f.cholesky()).collect::<Result<Vec<_>>>()?;
        let shape = TensorShape::new(factors.iter().map(|f| f.dim()).collect(), components);
        Ok(Self {
            shape,
            factors,
            cholesky,
        })
    }

    pub fn shape(&self) -> &TensorShape {
        &self.shape
    }

    pub fn factors(&self) -> &[BandedRealMatrix] {
        &self.factors
    }

    fn check(&self, y: &[C]) -> Result<()> {
        if y.len() != self.shape.len() {
            return Err(Error::LengthMismatch {
                expected: self.shape.len(),
                actual: y.len(),
            });
        }
        Ok(())
    }

    /// `S y`.
    pub fn apply(&self, y: &[C]) -> Result<Vec<C>> {
        self.check(y)?;
        let mut x = y.to_vec();
        for (axis, f) in self.factors.iter().enumerate() {
            apply_axis(&self.shape, axis, &mut x, |p| {
                let src = p.to_vec();
                f.mul_complex_into(&src, p);
            });
        }
        Ok(x)
    }

    /// `S^-1 y` by band Cholesky solves along each axis.
    pub fn apply_inverse(&self, y: &[C]) -> Result<Vec<C>> {
        self.check(y)?;
        let mut x = y.to_vec();
        self.apply_inverse_in_place(&mut x);
        Ok(x)
    }

    pub fn apply_inverse_in_place(&self, x: &mut [C]) {
        for (axis, ch) in self.cholesky.iter().enumerate() {
            apply_axis(&self.shape, axis, x, |p| ch.solve_complex_in_place(p));
        }
    }

    /// `y^H S y`.
    pub fn norm_sqr(&self, y: &[C]) -> Result<f64> {
        let sy = self.apply(y)?;
        Ok(super::dot(y, &sy).re)
    }
}

impl Preconditioner for KroneckerOverlap {
    fn apply(&self, r: &[C], z: &mut [C]) {
        z.copy_from_slice(r);
        self.apply_inverse_in_place(z);
    }
}

/// `S^-1 y` for the Kronecker overlap.
pub fn kron_apply_inverse(k: &KroneckerOverlap, y: &[C]) -> Result<Vec<C>> {
    k.apply_inverse(y)
}
