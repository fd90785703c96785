//! Operators on tensor-product spline bases in two and three dimensions.
//!
//! A spinor field is stored in the layout of [`TensorShape`]. Hamiltonians
//! are kept in structured form: a sum of Kronecker products of 1D band
//! matrices, each coupling the spinor components through a small 4 x 4
//! matrix, plus a scalar potential stored as a local "window". Spline `i`
//! along an axis belongs to node `i / 2 + 1` and only meets the six splines
//! of nodes `i / 2 .. i / 2 + 2`, so every row of the potential matrix has at
//! most `6^d` entries, kept densely per row.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::grid_basis::{local_shape, GaussLegendre, Grid1D};
use crate::linalg::banded::{BandedMatrix, BandedRealMatrix};
use crate::linalg::bicgstab::{bicgstab_solve, BicgstabOptions, LinearOperator};
use crate::linalg::kron::{apply_axis, KroneckerOverlap, TensorShape};
use crate::linalg::{dot, norm2};
use crate::propagation::{PropagationResult, TimeGrid, TimeSample};
use crate::{Error, Result};

type C = Complex64;

/// Window width per axis.
pub const WINDOW: usize = 6;

/// First spline index of the window of spline `i` (may be negative).
#[inline]
fn window_start(i: usize) -> isize {
    2 * (i / 2) as isize - 2
}

/// Scalar potential matrix `V_ij = int phi_i V phi_j` on a tensor basis.
#[derive(Clone, Debug, PartialEq)]
pub struct WindowPotential {
    dims: Vec<usize>,
    data: Vec<f64>,
}

impl WindowPotential {
    pub fn zeros(dims: Vec<usize>) -> Self {
        let len = dims.iter().product::<usize>() * WINDOW.pow(dims.len() as u32);
        Self {
            dims,
            data: vec![0.0; len],
        }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    fn row_len(&self) -> usize {
        WINDOW.pow(self.dims.len() as u32)
    }

    /// Galerkin assembly of `v` with a `order`-point Gauss rule per axis and
    /// element.
    ///
    /// Every element is integrated by sum factorization: the potential values
    /// on the `order^d` points are contracted one axis at a time against the
    /// 16 products of local shape functions. Elements are handled in slabs
    /// along the first axis; within a slab the blocks are computed in
    /// parallel and scattered in a fixed order.
    pub fn assemble<F>(grids: &[&Grid1D], order: usize, v: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        let d = grids.len();
        if !(2..=3).contains(&d) {
            return Err(Error::InvalidArgument(format!("tensor dimension {d} unsupported")));
        }
        let rule = GaussLegendre::new(order);
        let q = rule.len();
        let dims: Vec<usize> = grids.iter().map(|g| g.basis_len()).collect();
        let mut out = Self::zeros(dims);
        // per axis and element: quadrature coordinates and the 16 weighted
        // shape products at each point
        let tables: Vec<Vec<(Vec<f64>, Vec<f64>)>> = grids
            .iter()
            .map(|g| {
                (0..g.intervals())
                    .map(|e| {
                        let (a, b) = (g.nodes()[e], g.nodes()[e + 1]);
                        let h = b - a;
                        let mut xs = Vec::with_capacity(q);
                        let mut prod = vec![0.0; 16 * q];
                        for (k, (x, w)) in rule.on_interval(a, b).enumerate() {
                            xs.push(x);
                            let s = local_shape((x - a) / h, h, 0);
                            for i in 0..4 {
                                for j in 0..4 {
                                    prod[(4 * i + j) * q + k] = w * s[i] * s[j];
                                }
                            }
                        }
                        (xs, prod)
                    })
                    .collect()
            })
            .collect();
        let counts: Vec<usize> = grids.iter().map(|g| g.intervals()).collect();
        let rest: usize = counts[1..].iter().product();
        let block_len = 16usize.pow(d as u32);
        for e0 in 0..counts[0] {
            let blocks: Vec<Result<Vec<f64>>> = (0..rest)
                .into_par_iter()
                .map_init(
                    || (vec![0.0; q.pow(d as u32)], vec![0.0; q.pow(d as u32) * 16], vec![0.0; block_len]),
                    |(vals, work_a, work_b), flat| {
                        let mut es = vec![e0; d];
                        let mut r = flat;
                        for axis in (1..d).rev() {
                            es[axis] = r % counts[axis];
                            r /= counts[axis];
                        }
                        element_block(&tables, &es, q, &v, vals, work_a, work_b)
                    },
                )
                .collect();
            for (flat, block) in blocks.into_iter().enumerate() {
                let block = block?;
                let mut es = vec![e0; d];
                let mut r = flat;
                for axis in (1..d).rev() {
                    es[axis] = r % counts[axis];
                    r /= counts[axis];
                }
                out.scatter(grids, &es, &block);
            }
        }
        Ok(out)
    }

    fn scatter(&mut self, grids: &[&Grid1D], es: &[usize], block: &[f64]) {
        let d = grids.len();
        let row_len = self.row_len();
        // per axis: valid (local a, local b, global row, window offset)
        let pairs: Vec<Vec<(usize, usize, usize)>> = (0..d)
            .map(|axis| {
                let mut v = Vec::new();
                for a in 0..4 {
                    let Some(ga) = grids[axis].local_to_global(es[axis], a) else { continue };
                    for b in 0..4 {
                        if grids[axis].local_to_global(es[axis], b).is_some() {
                            v.push((4 * a + b, ga, b + 2 - 2 * (a / 2)));
                        }
                    }
                }
                v
            })
            .collect();
        match d {
            2 => {
                for &(p0, r0, o0) in &pairs[0] {
                    for &(p1, r1, o1) in &pairs[1] {
                        let row = r0 * self.dims[1] + r1;
                        self.data[row * row_len + o0 * WINDOW + o1] += block[p0 * 16 + p1];
                    }
                }
            }
            _ => {
                for &(p0, r0, o0) in &pairs[0] {
                    for &(p1, r1, o1) in &pairs[1] {
                        for &(p2, r2, o2) in &pairs[2] {
                            let row = (r0 * self.dims[1] + r1) * self.dims[2] + r2;
                            self.data[row * row_len + (o0 * WINDOW + o1) * WINDOW + o2] +=
                                block[(p0 * 16 + p1) * 16 + p2];
                        }
                    }
                }
            }
        }
    }

    /// `self += alpha * other`.
    pub fn add_scaled(&mut self, alpha: f64, other: &Self) {
        assert_eq!(self.dims, other.dims);
        self.data
            .par_iter_mut()
            .zip(other.data.par_iter())
            .for_each(|(a, b)| *a += alpha * b);
    }

    pub fn copy_from(&mut self, other: &Self) {
        assert_eq!(self.dims, other.dims);
        self.data.copy_from_slice(&other.data);
    }

    /// Entry between spatial tuples `row` and `col`.
    pub fn get(&self, row: &[usize], col: &[usize]) -> f64 {
        let mut offset = 0;
        for axis in 0..self.dims.len() {
            let o = col[axis] as isize - window_start(row[axis]);
            if !(0..WINDOW as isize).contains(&o) {
                return 0.0;
            }
            offset = offset * WINDOW + o as usize;
        }
        let mut flat = 0;
        for (axis, &r) in row.iter().enumerate() {
            flat = flat * self.dims[axis] + r;
        }
        self.data[flat * self.row_len() + offset]
    }

    /// `y += (V (x) I_components) x`.
    pub fn apply_add(&self, components: usize, x: &[C], y: &mut [C]) {
        let row_len = self.row_len();
        let dims = &self.dims;
        let nc = components;
        match dims.len() {
            2 => {
                let n1 = dims[1];
                y.par_chunks_mut(n1 * nc).enumerate().for_each(|(i0, yrow)| {
                    for i1 in 0..n1 {
                        let w = &self.data[(i0 * n1 + i1) * row_len..][..row_len];
                        let mut acc = [C::new(0.0, 0.0); 4];
                        for o0 in 0..WINDOW {
                            let j0 = window_start(i0) + o0 as isize;
                            if j0 < 0 || j0 >= dims[0] as isize {
                                continue;
                            }
                            for o1 in 0..WINDOW {
                                let j1 = window_start(i1) + o1 as isize;
                                if j1 < 0 || j1 >= n1 as isize {
                                    continue;
                                }
                                let v = w[o0 * WINDOW + o1];
                                let src = (j0 as usize * n1 + j1 as usize) * nc;
                                for k in 0..nc {
                                    acc[k] += x[src + k] * v;
                                }
                            }
                        }
                        for k in 0..nc {
                            yrow[i1 * nc + k] += acc[k];
                        }
                    }
                });
            }
            _ => {
                let (n1, n2) = (dims[1], dims[2]);
                y.par_chunks_mut(n1 * n2 * nc).enumerate().for_each(|(i0, yslab)| {
                    for i1 in 0..n1 {
                        for i2 in 0..n2 {
                            let w = &self.data[((i0 * n1 + i1) * n2 + i2) * row_len..][..row_len];
                            let mut acc = [C::new(0.0, 0.0); 4];
                            for o0 in 0..WINDOW {
                                let j0 = window_start(i0) + o0 as isize;
                                if j0 < 0 || j0 >= dims[0] as isize {
                                    continue;
                                }
                                for o1 in 0..WINDOW {
                                    let j1 = window_start(i1) + o1 as isize;
                                    if j1 < 0 || j1 >= n1 as isize {
                                        continue;
                                    }
                                    let base = (j0 as usize * n1 + j1 as usize) * n2;
                                    let wrow = &w[(o0 * WINDOW + o1) * WINDOW..][..WINDOW];
                                    for (o2, &v) in wrow.iter().enumerate() {
                                        let j2 = window_start(i2) + o2 as isize;
                                        if j2 < 0 || j2 >= n2 as isize {
                                            continue;
                                        }
                                        let src = (base + j2 as usize) * nc;
                                        for k in 0..nc {
                                            acc[k] += x[src + k] * v;
                                        }
                                    }
                                }
                            }
                            for k in 0..nc {
                                yslab[(i1 * n2 + i2) * nc + k] += acc[k];
                            }
                        }
                    }
                });
            }
        }
    }

    /// Calls `f(row, col, value)` for every stored spatial entry.
    pub fn for_each_entry(&self, mut f: impl FnMut(usize, usize, f64)) {
        let d = self.dims.len();
        let row_len = self.row_len();
        let n: usize = self.dims.iter().product();
        let mut idx = vec![0usize; d];
        for row in 0..n {
            let mut r = row;
            for axis in (0..d).rev() {
                idx[axis] = r % self.dims[axis];
                r /= self.dims[axis];
            }
            for o in 0..row_len {
                let v = self.data[row * row_len + o];
                if v == 0.0 {
                    continue;
                }
                let mut rem = o;
                let mut col = 0usize;
                let mut ok = true;
                let mut offs = vec![0usize; d];
                for axis in (0..d).rev() {
                    offs[axis] = rem % WINDOW;
                    rem /= WINDOW;
                }
                for axis in 0..d {
                    let j = window_start(idx[axis]) + offs[axis] as isize;
                    if j < 0 || j >= self.dims[axis] as isize {
                        ok = false;
                        break;
                    }
                    col = col * self.dims[axis] + j as usize;
                }
                if ok {
                    f(row, col, v);
                }
            }
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn element_block<F>(
    tables: &[Vec<(Vec<f64>, Vec<f64>)>],
    es: &[usize],
    q: usize,
    v: &F,
    vals: &mut [f64],
    work_a: &mut Vec<f64>,
    work_b: &mut Vec<f64>,
) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let d = es.len();
    let mut point = [0.0f64; 3];
    let total = q.pow(d as u32);
    for (flat, val) in vals.iter_mut().enumerate().take(total) {
        let mut r = flat;
        for axis in (0..d).rev() {
            point[axis] = tables[axis][es[axis]].0[r % q];
            r /= q;
        }
        let value = v(&point[..d]);
        if !value.is_finite() {
            return Err(Error::NonFinite {
                x: point[0],
                value,
            });
        }
        *val = value;
    }
    // contract the last quadrature index first; the layout is always
    // [remaining q indices][finished pair indices]
    let mut cur: &mut Vec<f64> = work_a;
    let mut next: &mut Vec<f64> = work_b;
    cur.clear();
    cur.extend_from_slice(&vals[..total]);
    let mut tail = 1usize;
    for axis in (0..d).rev() {
        let outer = q.pow(axis as u32);
        let prod = &tables[axis][es[axis]].1;
        next.clear();
        next.resize(outer * 16 * tail, 0.0);
        for o in 0..outer {
            for p in 0..16 {
                let bp = &prod[p * q..(p + 1) * q];
                let dst = &mut next[(o * 16 + p) * tail..][..tail];
                for (k, &b) in bp.iter().enumerate() {
                    if b == 0.0 {
                        continue;
                    }
                    let src = &cur[(o * q + k) * tail..][..tail];
                    for (dv, sv) in dst.iter_mut().zip(src) {
                        *dv += b * sv;
                    }
                }
            }
        }
        std::mem::swap(&mut cur, &mut next);
        tail *= 16;
    }
    Ok(cur.clone())
}

/// One Kronecker term `coupling (x) A_0 (x) A_1 (x) ..` of a spinor operator.
#[derive(Clone, Debug)]
pub struct KronTerm {
    pub factors: Vec<Arc<BandedRealMatrix>>,
    /// `coupling[k][l]` multiplies component `l` into component `k`.
    pub coupling: [[C; 4]; 4],
}

/// `H = sum_terms + (V (x) I_4)` on a tensor basis.
#[derive(Clone, Debug)]
pub struct TensorHamiltonian {
    shape: TensorShape,
    terms: Vec<KronTerm>,
    potential: WindowPotential,
}

impl TensorHamiltonian {
    pub fn new(shape: TensorShape, terms: Vec<KronTerm>, potential: WindowPotential) -> Result<Self> {
        for t in &terms {
            if t.factors.len() != shape.dims.len()
                || t.factors.iter().zip(&shape.dims).any(|(f, &n)| f.dim() != n)
            {
                return Err(Error::InvalidArgument("Kronecker factor does not match the shape".into()));
            }
        }
        if potential.dims() != shape.dims.as_slice() {
            return Err(Error::InvalidArgument("potential does not match the shape".into()));
        }
        Ok(Self {
            shape,
            terms,
            potential,
        })
    }

    pub fn shape(&self) -> &TensorShape {
        &self.shape
    }

    pub fn potential(&self) -> &WindowPotential {
        &self.potential
    }

    pub fn potential_mut(&mut self) -> &mut WindowPotential {
        &mut self.potential
    }

    /// `y = H x`.
    pub fn apply(&self, x: &[C], y: &mut [C]) {
        let nc = self.shape.components;
        y.fill(C::new(0.0, 0.0));
        self.potential.apply_add(nc, x, y);
        let mut tmp = vec![C::new(0.0, 0.0); x.len()];
        for term in &self.terms {
            tmp.copy_from_slice(x);
            for (axis, f) in term.factors.iter().enumerate() {
                apply_axis(&self.shape, axis, &mut tmp, |p| {
                    let src = p.to_vec();
                    f.mul_complex_into(&src, p);
                });
            }
            let cp = &term.coupling;
            y.par_chunks_mut(nc)
                .zip(tmp.par_chunks(nc))
                .for_each(|(yr, tr)| {
                    for k in 0..nc {
                        let mut acc = C::new(0.0, 0.0);
                        for l in 0..nc {
                            acc += cp[k][l] * tr[l];
                        }
                        yr[k] += acc;
                    }
                });
        }
    }

    /// Calls `f(row, col, value)` for every explicit matrix entry; entries of
    /// different terms at the same position are reported separately.
    pub fn for_each_entry(&self, mut f: impl FnMut(usize, usize, C)) {
        let nc = self.shape.components;
        self.potential.for_each_entry(|r, c, v| {
            for k in 0..nc {
                f(r * nc + k, c * nc + k, C::new(v, 0.0));
            }
        });
        let d = self.shape.dims.len();
        for term in &self.terms {
            let pairs: Vec<(usize, usize)> = (0..nc)
                .flat_map(|k| (0..nc).map(move |l| (k, l)))
                .filter(|&(k, l)| term.coupling[k][l] != C::new(0.0, 0.0))
                .collect();
            kron_entries(&term.factors, &self.shape.dims, 0, 0, 0, 1.0, d, &mut |r, c, v| {
                for &(k, l) in &pairs {
                    f(r * nc + k, c * nc + l, term.coupling[k][l] * v);
                }
            });
        }
    }

    /// Explicit band form (for small grids and the stationary solve).
    pub fn to_banded(&self) -> BandedMatrix<C> {
        let w = band_half_width(&self.shape);
        let mut m = BandedMatrix::zeros(self.shape.len(), w, w);
        self.for_each_entry(|r, c, v| m.add(r, c, v));
        m
    }

    /// Explicit band form of the real part, for Hamiltonians with real couplings.
    pub fn to_banded_real(&self) -> BandedRealMatrix {
        let w = band_half_width(&self.shape);
        let mut m = BandedRealMatrix::zeros(self.shape.len(), w, w);
        self.for_each_entry(|r, c, v| m.add(r, c, v.re));
        m
    }

    pub fn triplets(&self) -> Vec<(usize, usize, C)> {
        let mut t = Vec::new();
        self.for_each_entry(|r, c, v| t.push((r, c, v)));
        t
    }
}

/// Half-bandwidth of any operator with per-axis half-bandwidth 3 in `shape`.
pub fn band_half_width(shape: &TensorShape) -> usize {
    (0..shape.dims.len())
        .map(|axis| 3 * shape.stride(axis))
        .sum::<usize>()
        + shape.components
        - 1
}

#[allow(clippy::too_many_arguments)]
fn kron_entries(
    factors: &[Arc<BandedRealMatrix>],
    dims: &[usize],
    axis: usize,
    row: usize,
    col: usize,
    value: f64,
    d: usize,
    f: &mut dyn FnMut(usize, usize, f64),
) {
    if axis == d {
        f(row, col, value);
        return;
    }
    let n = dims[axis];
    for i in 0..n {
        for (j, a) in factors[axis].row(i) {
            if a != 0.0 {
                kron_entries(factors, dims, axis + 1, row * n + i, col * n + j, value * a, d, f);
            }
        }
    }
}

/// The Crank-Nicolson matrix `S + i dt/2 H` as an operator.
pub struct CnOperator<'a> {
    pub h: &'a TensorHamiltonian,
    pub s: &'a KroneckerOverlap,
    pub half_dt: f64,
}

impl LinearOperator for CnOperator<'_> {
    fn dim(&self) -> usize {
        self.h.shape.len()
    }

    fn apply(&self, x: &[C], y: &mut [C]) {
        self.h.apply(x, y);
        let sx = self.s.apply(x).expect("shape checked at construction");
        let f = C::new(0.0, self.half_dt);
        y.par_iter_mut().zip(sx.par_iter()).for_each(|(y, s)| *y = s + f * *y);
    }
}

impl LinearOperator for TensorHamiltonian {
    fn dim(&self) -> usize {
        self.shape.len()
    }

    fn apply(&self, x: &[C], y: &mut [C]) {
        TensorHamiltonian::apply(self, x, y);
    }
}

/// `H - sigma S` as an operator.
pub struct ShiftedOperator<'a> {
    pub h: &'a TensorHamiltonian,
    pub s: &'a KroneckerOverlap,
    pub sigma: f64,
}

impl LinearOperator for ShiftedOperator<'_> {
    fn dim(&self) -> usize {
        self.h.shape.len()
    }

    fn apply(&self, x: &[C], y: &mut [C]) {
        self.h.apply(x, y);
        let sx = self.s.apply(x).expect("shape checked at construction");
        let sigma = self.sigma;
        y.par_iter_mut().zip(sx.par_iter()).for_each(|(y, s)| *y -= s * sigma);
    }
}

/// Settings of [`tensor_shift_invert`].
#[derive(Clone, Copy, Debug)]
pub struct TensorEigenOptions {
    /// Target for `|H x - e S x| / (|e| |S x|)`.
    pub tol: f64,
    pub max_iter: usize,
    pub inner: BicgstabOptions,
}

impl Default for TensorEigenOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 50,
            inner: BicgstabOptions {
                tol: 1e-10,
                max_iter: 5000,
            },
        }
    }
}

/// Inverse iteration for the eigenpair of `H x = e S x` nearest `sigma`,
/// with BiCGSTAB solves of `(H - sigma S) y = S x`.
///
/// `x` holds the start vector on entry and the S-normalized eigenvector on
/// return; the result is the Rayleigh quotient.
pub fn tensor_shift_invert(
    h: &TensorHamiltonian,
    s: &KroneckerOverlap,
    sigma: f64,
    x: &mut [C],
    opts: &TensorEigenOptions,
) -> Result<f64> {
    let n = h.shape.len();
    if x.len() != n || s.shape().len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: x.len(),
        });
    }
    let op = ShiftedOperator { h, s, sigma };
    let mut hx = vec![C::new(0.0, 0.0); n];
    let mut energy = f64::NAN;
    let mut residual = f64::INFINITY;
    for _ in 0..opts.max_iter {
        let sx = s.apply(x)?;
        let (y, _) = bicgstab_solve(&op, &sx, Some(x), &opts.inner, Some(s))?;
        let norm = s.norm_sqr(&y)?.sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::Eigen("inverse iteration produced a null vector".into()));
        }
        x.iter_mut().zip(&y).for_each(|(xi, yi)| *xi = yi / norm);
        h.apply(x, &mut hx);
        let sx = s.apply(x)?;
        energy = dot(x, &hx).re;
        let r: f64 = hx.iter().zip(&sx).map(|(a, b)| (a - b * energy).norm_sqr()).sum::<f64>().sqrt();
        residual = r / (energy.abs().max(1.0) * norm2(&sx));
        if residual <= opts.tol {
            return Ok(energy);
        }
    }
    Err(Error::Eigen(format!(
        "inverse iteration stalled at e = {energy}, relative residual {residual:e}"
    )))
}

/// Settings of a Crank-Nicolson run on a tensor basis.
#[derive(Clone, Copy, Debug)]
pub struct TensorRunOptions {
    pub bicgstab: BicgstabOptions,
    /// Relative norm drift that aborts the run.
    pub norm_limit: f64,
    /// Record a time sample every this many steps (0 records only the ends).
    pub sample_every: usize,
}

impl Default for TensorRunOptions {
    fn default() -> Self {
        Self {
            bicgstab: BicgstabOptions {
                tol: 1e-12,
                max_iter: 500,
            },
            norm_limit: 1e-6,
            sample_every: 0,
        }
    }
}

/// `<x|H|x> / <x|S|x>`.
pub fn tensor_energy(h: &TensorHamiltonian, s: &KroneckerOverlap, x: &[C]) -> Result<f64> {
    let mut hx = vec![C::new(0.0, 0.0); x.len()];
    h.apply(x, &mut hx);
    Ok(dot(x, &hx).re / s.norm_sqr(x)?)
}

/// Crank-Nicolson propagation with BiCGSTAB inner solves.
///
/// Runs from step `start_step` of `grid` with coefficients `initial`, calling
/// `hamiltonian_at(t)` for the midpoint Hamiltonian of every step and
/// `on_step(step, coeffs)` after every completed step. The linear system
/// `[S + i dt/2 H] x = [S - i dt/2 H] C` is solved with `S^-1` as the right
/// preconditioner and `C` as the starting guess.
pub fn propagate_tensor<H>(
    overlap: &KroneckerOverlap,
    hamiltonian_at: H,
    grid: &TimeGrid,
    start_step: usize,
    initial: Vec<C>,
    opts: &TensorRunOptions,
    on_step: &mut dyn FnMut(usize, &[C]) -> Result<()>,
) -> Result<PropagationResult>
where
    H: Fn(f64) -> Result<TensorHamiltonian>,
{
    let n = overlap.shape().len();
    if initial.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: initial.len(),
        });
    }
    if start_step > grid.steps {
        return Err(Error::InvalidArgument(format!(
            "start step {start_step} beyond {} steps",
            grid.steps
        )));
    }
    let mut c = initial;
    let norm0 = overlap.norm_sqr(&c)?;
    let mut samples = Vec::new();
    let mut max_drift = 0.0f64;
    let mut e_min = None;
    let mut iterations = 0;
    let mut hc = vec![C::new(0.0, 0.0); n];
    let sample = |k: usize, c: &[C]| -> Result<TimeSample> {
        let t = grid.time(k);
        let h = hamiltonian_at(t)?;
        Ok(TimeSample {
            t,
            norm: overlap.norm_sqr(c)?,
            energy: tensor_energy(&h, overlap, c)?,
        })
    };
    samples.push(sample(start_step, &c)?);
    if Some(start_step) == grid.zero_crossing() {
        e_min = Some(samples[0].energy);
    }
    for k in start_step..grid.steps {
        let dt = grid.width(k);
        let h = hamiltonian_at(grid.time(k) + 0.5 * dt)?;
        h.apply(&c, &mut hc);
        let mut rhs = overlap.apply(&c)?;
        let f = C::new(0.0, 0.5 * dt);
        rhs.par_iter_mut().zip(hc.par_iter()).for_each(|(r, h)| *r -= f * *h);
        let op = CnOperator {
            h: &h,
            s: overlap,
            half_dt: 0.5 * dt,
        };
        let (next, report) = bicgstab_solve(&op, &rhs, Some(&c), &opts.bicgstab, Some(overlap))?;
        iterations += report.iterations;
        c = next;
        let step = k + 1;
        let norm = overlap.norm_sqr(&c)?;
        let drift = ((norm - norm0) / norm0).abs();
        max_drift = max_drift.max(drift);
        if !(drift <= opts.norm_limit) {
            return Err(Error::NormDrift {
                drift,
                limit: opts.norm_limit,
                time: grid.time(step),
            });
        }
        if Some(step) == grid.zero_crossing() {
            e_min = Some(tensor_energy(&hamiltonian_at(0.0)?, overlap, &c)?);
        }
        if step == grid.steps || (opts.sample_every > 0 && step % opts.sample_every == 0) {
            samples.push(sample(step, &c)?);
        }
        on_step(step, &c)?;
    }
    Ok(PropagationResult {
        samples,
        final_coefficients: c,
        final_time: grid.t_end,
        steps: grid.steps,
        max_norm_drift: max_drift,
        closest_approach_energy: e_min,
        probabilities: Default::default(),
        inner_iterations: iterations,
    })
}
