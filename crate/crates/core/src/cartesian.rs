//! The full three-dimensional problem on a Cartesian tensor lattice.
//!
//! Each bispinor component is expanded in `s(x) s(y) s(z)` products. The
//! Hamiltonian, in the standard representation with the rest energy
//! subtracted, is
//!
//! ```text
//! H = -i c (alpha_x d_x + alpha_y d_y + alpha_z d_z) + (beta - 1) c^2 + V
//! ```
//!
//! so every kinetic term is a Kronecker product of one derivative matrix and
//! two overlaps, and `S = S_x (x) S_y (x) S_z` is inverted factor by factor.
//! The target sits at the origin and the projectile moves along
//! `(b, 0, v t)`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::axial::intervals_for;
use crate::checkpoint::{propagate_checkpointed, Checkpoint, CheckpointPolicy, GridDescriptor};
use crate::fields::{CollisionSystem, Trajectory};
use crate::grid_basis::{
    assemble_first_derivative, assemble_overlap, evaluate, local_shape, GaussLegendre, Grid1D,
    DEFAULT_QUADRATURE_ORDER,
};
use crate::linalg::dot;
use crate::linalg::kron::{KroneckerOverlap, TensorShape};
use crate::linalg::sparse::SparseMatrix;
use crate::monopole::{RadialChannel, RadialState};
use crate::propagation::{PropagationResult, TimeGrid};
use crate::tensor::{
    tensor_shift_invert, KronTerm, TensorEigenOptions, TensorHamiltonian, TensorRunOptions,
    WindowPotential,
};
use crate::units::{fm_to_bohr, REST_ENERGY, SPEED_OF_LIGHT};
use crate::{Error, Result};

type C = Complex64;

/// Basis of the Cartesian problem; axes 0, 1, 2 are `x`, `y`, `z`.
#[derive(Clone, Debug, PartialEq)]
pub struct CartGrid3D {
    pub x: Grid1D,
    pub y: Grid1D,
    pub z: Grid1D,
}

impl CartGrid3D {
    pub fn new(x: Grid1D, y: Grid1D, z: Grid1D) -> Result<Self> {
        for (name, g) in [("x", &x), ("y", &y), ("z", &z)] {
            if !(g.start() < 0.0 && g.end() > 0.0) {
                return Err(Error::InvalidGrid(format!("{name} grid must contain the target at 0")));
            }
        }
        Ok(Self { x, y, z })
    }

    /// Box `[-w/2, w/2]^2 x [z_lo, z_hi]` (fm) with the given spline counts.
    pub fn uniform_fm(width: f64, splines_xy: usize, z_lo: f64, z_hi: f64, splines_z: usize) -> Result<Self> {
        let h = fm_to_bohr(0.5 * width);
        let n = intervals_for(splines_xy)?;
        Self::new(
            Grid1D::uniform(-h, h, n)?,
            Grid1D::uniform(-h, h, n)?,
            Grid1D::uniform(fm_to_bohr(z_lo), fm_to_bohr(z_hi), intervals_for(splines_z)?)?,
        )
    }

    /// 40 x 40 x 80 splines in a 6900 x 6900 x 13800 fm box, target a quarter
    /// box length from the centre towards the incoming projectile.
    pub fn production() -> Self {
        Self::uniform_fm(6900.0, 40, -3450.0, 10350.0, 80).expect("valid grid")
    }

    /// 16 x 16 x 32 splines in the production box.
    pub fn coarse() -> Self {
        Self::uniform_fm(6900.0, 16, -3450.0, 10350.0, 32).expect("valid grid")
    }

    pub fn axes(&self) -> [&Grid1D; 3] {
        [&self.x, &self.y, &self.z]
    }

    pub fn shape(&self) -> TensorShape {
        TensorShape::new(self.axes().iter().map(|g| g.basis_len()).collect(), 4)
    }

    pub fn len(&self) -> usize {
        self.shape().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn descriptor(&self) -> GridDescriptor {
        GridDescriptor::new(&self.axes(), 4)
    }

    /// Distance from the target to the nearer end of the `z` box.
    pub fn clearance(&self) -> f64 {
        (-self.z.start()).min(self.z.end())
    }

    /// Projectile `z` at the end of a default run: the clearance away from
    /// the far end of the box.
    pub fn exit_z(&self) -> f64 {
        self.z.end() - self.clearance()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpinorField3D {
    pub coeffs: Vec<C>,
}

/// `S_x (x) S_y (x) S_z (x) I_4`.
pub fn assemble_overlap_3d(grid: &CartGrid3D) -> Result<KroneckerOverlap> {
    KroneckerOverlap::new(grid.axes().iter().map(|g| assemble_overlap(g)).collect(), 4)
}

fn kinetic_terms(grid: &CartGrid3D) -> Vec<KronTerm> {
    let c = SPEED_OF_LIGHT;
    let s: Vec<Arc<_>> = grid.axes().iter().map(|g| Arc::new(assemble_overlap(g))).collect();
    let d: Vec<Arc<_>> = grid.axes().iter().map(|g| Arc::new(assemble_first_derivative(g))).collect();
    let zero = C::new(0.0, 0.0);
    let mi = C::new(0.0, -c);
    // -i c alpha_k
    let mut ax = [[zero; 4]; 4];
    ax[0][3] = mi;
    ax[1][2] = mi;
    ax[2][1] = mi;
    ax[3][0] = mi;
    let mut ay = [[zero; 4]; 4];
    ay[0][3] = C::new(-c, 0.0);
    ay[1][2] = C::new(c, 0.0);
    ay[2][1] = C::new(-c, 0.0);
    ay[3][0] = C::new(c, 0.0);
    let mut az = [[zero; 4]; 4];
    az[0][2] = mi;
    az[1][3] = -mi;
    az[2][0] = mi;
    az[3][1] = -mi;
    let mut mass = [[zero; 4]; 4];
    mass[2][2] = C::new(-2.0 * REST_ENERGY, 0.0);
    mass[3][3] = C::new(-2.0 * REST_ENERGY, 0.0);
    vec![
        KronTerm {
            factors: vec![d[0].clone(), s[1].clone(), s[2].clone()],
            coupling: ax,
        },
        KronTerm {
            factors: vec![s[0].clone(), d[1].clone(), s[2].clone()],
            coupling: ay,
        },
        KronTerm {
            factors: vec![s[0].clone(), s[1].clone(), d[2].clone()],
            coupling: az,
        },
        KronTerm {
            factors: s,
            coupling: mass,
        },
    ]
}

/// Galerkin matrix of a potential `v(x, y, z)`.
pub fn cartesian_potential<F>(grid: &CartGrid3D, order: usize, v: F) -> Result<WindowPotential>
where
    F: Fn(f64, f64, f64) -> Result<f64> + Sync,
{
    WindowPotential::assemble(&grid.axes(), order, |p| v(p[0], p[1], p[2]).unwrap_or(f64::NAN))
}

/// Explicit Dirac matrix for the potential `v`; meant for small grids.
pub fn assemble_dirac_3d<F>(grid: &CartGrid3D, v: F) -> Result<SparseMatrix<C>>
where
    F: Fn(f64, f64, f64) -> Result<f64> + Sync,
{
    let pot = cartesian_potential(grid, DEFAULT_QUADRATURE_ORDER, v)?;
    let h = TensorHamiltonian::new(grid.shape(), kinetic_terms(grid), pot)?;
    SparseMatrix::from_triplets(grid.len(), h.triplets())
}

/// Time-independent pieces of the Cartesian problem.
#[derive(Clone, Debug)]
pub struct CartesianSolver {
    grid: CartGrid3D,
    system: CollisionSystem,
    overlap: KroneckerOverlap,
    kinetic: Vec<KronTerm>,
    v_target: WindowPotential,
    quadrature_order: usize,
}

impl CartesianSolver {
    pub fn new(grid: CartGrid3D, system: CollisionSystem) -> Result<Self> {
        system.validate()?;
        let order = DEFAULT_QUADRATURE_ORDER;
        let overlap = assemble_overlap_3d(&grid)?;
        let kinetic = kinetic_terms(&grid);
        let v_target = cartesian_potential(&grid, order, |x, y, z| {
            system.target_potential((x * x + y * y + z * z).sqrt())
        })?;
        Ok(Self {
            grid,
            system,
            overlap,
            kinetic,
            v_target,
            quadrature_order: order,
        })
    }

    pub fn grid(&self) -> &CartGrid3D {
        &self.grid
    }

    pub fn system(&self) -> &CollisionSystem {
        &self.system
    }

    pub fn overlap(&self) -> &KroneckerOverlap {
        &self.overlap
    }

    pub fn target_hamiltonian(&self) -> TensorHamiltonian {
        TensorHamiltonian::new(self.grid.shape(), self.kinetic.clone(), self.v_target.clone())
            .expect("shapes agree by construction")
    }

    pub fn hamiltonian_at(&self, traj: &Trajectory, t: f64) -> Result<TensorHamiltonian> {
        let mut h = self.target_hamiltonian();
        if self.system.z_b != 0.0 {
            let [bx, by, bz] = traj.position(t);
            let vb = cartesian_potential(&self.grid, self.quadrature_order, |x, y, z| {
                self.system
                    .projectile_potential(((x - bx).powi(2) + (y - by).powi(2) + (z - bz).powi(2)).sqrt())
            })?;
            h.potential_mut().add_scaled(1.0, &vb);
        }
        Ok(h)
    }

    /// Path starting where the internuclear distance equals the clearance.
    pub fn trajectory(&self, b: f64) -> Result<Trajectory> {
        Trajectory::starting_at_distance(self.system.velocity(), b, self.grid.clearance())
    }

    /// From the start of `traj` until the projectile is near `exit_z`.
    pub fn time_grid(&self, traj: &Trajectory, steps: usize) -> TimeGrid {
        TimeGrid::through_zero(traj.start_time(), self.grid.exit_z() / traj.v, steps)
    }

    /// `<psi|H_target|psi> / <psi|psi>`.
    pub fn target_energy(&self, field: &SpinorField3D) -> Result<f64> {
        crate::tensor::tensor_energy(&self.target_hamiltonian(), &self.overlap, &field.coeffs)
    }
}

/// Large and small radial functions `P`, `Q` of a `kappa = -1` orbital and
/// their first three derivatives.
pub trait CentralOrbital: Sync {
    fn radial(&self, r: f64) -> [[f64; 4]; 2];
}

/// Point-nucleus Dirac 1s, `P = r^g e^{-Z r}`, `Q = -sqrt((1-g)/(1+g)) P`,
/// with `g = sqrt(1 - (Z/c)^2)`; not normalized.
#[derive(Clone, Copy, Debug)]
pub struct PointNucleusOrbital {
    pub z: f64,
}

impl CentralOrbital for PointNucleusOrbital {
    fn radial(&self, r: f64) -> [[f64; 4]; 2] {
        let z = self.z;
        let g = (1.0 - (z / SPEED_OF_LIGHT).powi(2)).sqrt();
        let p = r.powf(g) * (-z * r).exp();
        // d/dr of r^g e^{-zr} = P (g/r - z)
        let u = g / r - z;
        let u1 = -g / (r * r);
        let u2 = 2.0 * g / (r * r * r);
        let p1 = p * u;
        let p2 = p * (u * u + u1);
        let p3 = p * (u * u * u + 3.0 * u * u1 + u2);
        let ratio = -((1.0 - g) / (1.0 + g)).sqrt();
        let large = [p, p1, p2, p3];
        [large, large.map(|v| ratio * v)]
    }
}

/// A radial solution expanded in splines, e.g. the monopole ground state.
#[derive(Clone, Debug)]
pub struct SplineOrbital {
    grid: Grid1D,
    large: Vec<C>,
    small: Vec<C>,
}

impl SplineOrbital {
    pub fn new(channel: &RadialChannel, state: &RadialState) -> Result<Self> {
        if channel.kappa() != -1 {
            return Err(Error::InvalidArgument(format!(
                "interpolation needs a kappa = -1 orbital, got {}",
                channel.kappa()
            )));
        }
        Ok(Self {
            grid: channel.grid().clone(),
            large: state.large(),
            small: state.small(),
        })
    }
}

impl CentralOrbital for SplineOrbital {
    fn radial(&self, r: f64) -> [[f64; 4]; 2] {
        let mut out = [[0.0; 4]; 2];
        for d in 0..4 {
            out[0][d] = evaluate(&self.grid, &self.large, r, d as u8).re;
            out[1][d] = evaluate(&self.grid, &self.small, r, d as u8).re;
        }
        out
    }
}

/// Multilinear jet in `(x, y, z)`: entry `m` holds the mixed partial over the
/// axes in bit mask `m` (bit 0 = x).
#[derive(Clone, Copy, Debug, PartialEq)]
struct Jet([f64; 8]);

impl Jet {
    fn variable(value: f64, axis: usize) -> Self {
        let mut j = [0.0; 8];
        j[0] = value;
        j[1 << axis] = 1.0;
        Jet(j)
    }

    fn mul(&self, o: &Self) -> Self {
        let mut r = [0.0; 8];
        for (m, rm) in r.iter_mut().enumerate() {
            // all submasks s of m
            let mut s = m;
            loop {
                *rm += self.0[s] * o.0[m ^ s];
                if s == 0 {
                    break;
                }
                s = (s - 1) & m;
            }
        }
        Jet(r)
    }

    fn add(&self, o: &Self) -> Self {
        let mut r = self.0;
        for (a, b) in r.iter_mut().zip(o.0) {
            *a += b;
        }
        Jet(r)
    }

    /// `f(self)` from `f` and its first three derivatives at `self.0[0]`.
    fn compose(&self, f: [f64; 4]) -> Self {
        let mut r = [0.0; 8];
        r[0] = f[0];
        for (m, rm) in r.iter_mut().enumerate().skip(1) {
            let mut acc = 0.0;
            partitions(m, &mut Vec::new(), &mut |blocks| {
                let prod: f64 = blocks.iter().map(|&b| self.0[b]).product();
                acc += f[blocks.len()] * prod;
            });
            *rm = acc;
        }
        Jet(r)
    }
}

/// Calls `f` with every set partition of the bits of `mask`.
fn partitions(mask: usize, blocks: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
    if mask == 0 {
        f(blocks);
        return;
    }
    let low = mask & mask.wrapping_neg();
    let rest = mask ^ low;
    let mut s = rest;
    loop {
        blocks.push(low | s);
        partitions(rest ^ s, blocks, f);
        blocks.pop();
        if s == 0 {
            break;
        }
        s = (s - 1) & rest;
    }
}

/// `(P / r)` and derivatives from `P` and derivatives.
fn divide_by_r(p: [f64; 4], r: f64) -> [f64; 4] {
    let inv = [1.0 / r, -1.0 / (r * r), 2.0 / r.powi(3), -6.0 / r.powi(4)];
    let binom = [[1.0, 0.0, 0.0, 0.0], [1.0, 1.0, 0.0, 0.0], [1.0, 2.0, 1.0, 0.0], [1.0, 3.0, 3.0, 1.0]];
    let mut out = [0.0; 4];
    for n in 0..4 {
        for k in 0..=n {
            out[n] += binom[n][k] * p[k] * inv[n - k];
        }
    }
    out
}

/// Components of `psi_0` (the `m = 1/2` state) as jets at `(x, y, z)`:
///
/// ```text
/// psi = (4 pi)^(-1/2) (P/r, 0, -i (Q/r) z/r, -i (Q/r) (x + i y)/r)
/// ```
fn orbital_jets(orbital: &dyn CentralOrbital, x: f64, y: f64, z: f64) -> Result<[[C; 8]; 4]> {
    let r = (x * x + y * y + z * z).sqrt();
    if !(r > 0.0) {
        return Err(Error::NonFinite {
            x: r,
            value: f64::INFINITY,
        });
    }
    let jx = Jet::variable(x, 0);
    let jy = Jet::variable(y, 1);
    let jz = Jet::variable(z, 2);
    let s = jx.mul(&jx).add(&jy.mul(&jy)).add(&jz.mul(&jz));
    let rr = s.0[0];
    let jr = s.compose([
        rr.sqrt(),
        0.5 / rr.sqrt(),
        -0.25 / rr.powf(1.5),
        0.375 / rr.powf(2.5),
    ]);
    let [p, q] = orbital.radial(r);
    let g = divide_by_r(p, r);
    let f_over_r = divide_by_r(divide_by_r(q, r), r);
    let jg = jr.compose(g);
    let jh = jr.compose(f_over_r);
    let norm = 1.0 / (4.0 * PI).sqrt();
    let hz = jh.mul(&jz);
    let hx = jh.mul(&jx);
    let hy = jh.mul(&jy);
    let mut out = [[C::new(0.0, 0.0); 8]; 4];
    for m in 0..8 {
        out[0][m] = C::new(norm * jg.0[m], 0.0);
        out[2][m] = C::new(0.0, -norm * hz.0[m]);
        // -i (x + i y) h = y h - i x h
        out[3][m] = C::new(norm * hy.0[m], -norm * hx.0[m]);
    }
    for c in out.iter().flatten() {
        if !(c.re.is_finite() && c.im.is_finite()) {
            return Err(Error::NonFinite { x: r, value: f64::NAN });
        }
    }
    Ok(out)
}

/// Hermite interpolation of `orbital`: the coefficient of
/// `s^mu(x) s^nu(y) s^lambda(z)` at a node is the mixed partial
/// `d_x^mu d_y^nu d_z^lambda psi_0` there.
pub fn interpolate_3d(grid: &CartGrid3D, orbital: &dyn CentralOrbital) -> Result<SpinorField3D> {
    let shape = grid.shape();
    let [nx, ny, nz] = [shape.dims[0], shape.dims[1], shape.dims[2]];
    let (ax, ay, az) = (grid.x.nodes(), grid.y.nodes(), grid.z.nodes());
    let mut coeffs = vec![C::new(0.0, 0.0); shape.len()];
    let per_node: Vec<(usize, usize, usize, [[C; 8]; 4])> = (0..nx / 2)
        .into_par_iter()
        .flat_map_iter(|a| (0..ny / 2).flat_map(move |b| (0..nz / 2).map(move |c| (a, b, c))))
        .map(|(a, b, c)| orbital_jets(orbital, ax[a + 1], ay[b + 1], az[c + 1]).map(|j| (a, b, c, j)))
        .collect::<Result<Vec<_>>>()?;
    for (a, b, c, jets) in per_node {
        for m in 0..8usize {
            let (mx, my, mz) = (m & 1, (m >> 1) & 1, (m >> 2) & 1);
            let idx = (((2 * a + mx) * ny + 2 * b + my) * nz + 2 * c + mz) * 4;
            for k in 0..4 {
                coeffs[idx + k] = jets[k][m];
            }
        }
    }
    Ok(SpinorField3D { coeffs })
}

/// [`interpolate_3d`] normalized with the Kronecker overlap.
pub fn initial_state_3d(grid: &CartGrid3D, orbital: &dyn CentralOrbital) -> Result<SpinorField3D> {
    let mut field = interpolate_3d(grid, orbital)?;
    let norm = assemble_overlap_3d(grid)?.norm_sqr(&field.coeffs)?.sqrt();
    field.coeffs.iter_mut().for_each(|c| *c /= norm);
    Ok(field)
}

/// The four components of `field` at `p`.
pub fn evaluate_3d(grid: &CartGrid3D, field: &SpinorField3D, p: [f64; 3]) -> [C; 4] {
    let shape = grid.shape();
    let axes = grid.axes();
    let mut out = [C::new(0.0, 0.0); 4];
    let mut local = [[(0usize, 0.0f64); 4]; 3];
    let mut counts = [0usize; 3];
    for k in 0..3 {
        let Some(e) = axes[k].element_of(p[k]) else { return out };
        let (a, h) = (axes[k].nodes()[e], axes[k].width(e));
        let vals = local_shape((p[k] - a) / h, h, 0);
        for (l, v) in vals.iter().enumerate() {
            if let Some(g) = axes[k].local_to_global(e, l) {
                local[k][counts[k]] = (g, *v);
                counts[k] += 1;
            }
        }
    }
    for &(gx, fx) in &local[0][..counts[0]] {
        for &(gy, fy) in &local[1][..counts[1]] {
            for &(gz, fz) in &local[2][..counts[2]] {
                let base = ((gx * shape.dims[1] + gy) * shape.dims[2] + gz) * 4;
                let f = fx * fy * fz;
                for k in 0..4 {
                    out[k] += field.coeffs[base + k] * f;
                }
            }
        }
    }
    out
}

/// Turns `field` into the nearest eigenstate of the target Hamiltonian by
/// inverse iteration about `sigma`; returns the state and its energy.
pub fn relax_initial_state(
    solver: &CartesianSolver,
    field: &SpinorField3D,
    sigma: f64,
    opts: &TensorEigenOptions,
) -> Result<(SpinorField3D, f64)> {
    let mut x = field.coeffs.clone();
    let e = tensor_shift_invert(&solver.target_hamiltonian(), &solver.overlap, sigma, &mut x, opts)?;
    Ok((SpinorField3D { coeffs: x }, e))
}

/// Plane `normal . (r - point) = 0`; the projectile side is where the
/// expression is positive.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DividePlane {
    pub point: [f64; 3],
    pub normal: [f64; 3],
}

impl DividePlane {
    /// Perpendicular bisector of the segment from the target to `projectile`.
    pub fn bisecting(projectile: [f64; 3]) -> Self {
        Self {
            point: projectile.map(|v| 0.5 * v),
            normal: projectile,
        }
    }

    fn side(&self, p: [f64; 3]) -> f64 {
        (0..3).map(|k| self.normal[k] * (p[k] - self.point[k])).sum()
    }
}

/// Subdivisions per axis of elements cut by the plane.
pub const SUBCELLS: usize = 4;

/// Densities on the two sides of `plane`, `(projectile side, target side)`.
///
/// Every element is integrated with a tensor Gauss rule exact for the
/// density. Elements the plane cuts are split into `SUBCELLS^3` subcells and
/// each subcell's quadrature points are assigned to the side they lie on, so
/// the two parts always add up to the full norm.
pub fn half_space_norms(grid: &CartGrid3D, field: &SpinorField3D, plane: &DividePlane) -> Result<(f64, f64)> {
    let shape = grid.shape();
    if field.coeffs.len() != shape.len() {
        return Err(Error::LengthMismatch {
            expected: shape.len(),
            actual: field.coeffs.len(),
        });
    }
    let axes = grid.axes();
    let counts = axes.map(|g| g.intervals());
    let rule = GaussLegendre::new(4);
    let dims = [shape.dims[0], shape.dims[1], shape.dims[2]];
    let parts: Vec<(f64, f64)> = (0..counts[0])
        .into_par_iter()
        .map(|ex| {
            let mut acc = (0.0, 0.0);
            for ey in 0..counts[1] {
                for ez in 0..counts[2] {
                    let es = [ex, ey, ez];
                    let lo = [0, 1, 2].map(|k| axes[k].nodes()[es[k]]);
                    let hi = [0, 1, 2].map(|k| axes[k].nodes()[es[k] + 1]);
                    let mut min = f64::INFINITY;
                    let mut max = f64::NEG_INFINITY;
                    for corner in 0..8 {
                        let p = [0, 1, 2].map(|k| if corner >> k & 1 == 1 { hi[k] } else { lo[k] });
                        let s = plane.side(p);
                        min = min.min(s);
                        max = max.max(s);
                    }
                    let split = if min >= 0.0 || max <= 0.0 { 1 } else { SUBCELLS };
                    let (a, b) = element_density(axes, dims, &field.coeffs, es, split, &rule, plane);
                    acc.0 += a;
                    acc.1 += b;
                }
            }
            acc
        })
        .collect();
    Ok(parts.iter().fold((0.0, 0.0), |acc, p| (acc.0 + p.0, acc.1 + p.1)))
}

fn element_density(
    axes: [&Grid1D; 3],
    dims: [usize; 3],
    coeffs: &[C],
    es: [usize; 3],
    split: usize,
    rule: &GaussLegendre,
    plane: &DividePlane,
) -> (f64, f64) {
    let mut plus = 0.0;
    let mut minus = 0.0;
    // points and shape values per axis
    let pts: Vec<Vec<(f64, f64, [f64; 4])>> = (0..3)
        .map(|k| {
            let (a, b) = (axes[k].nodes()[es[k]], axes[k].nodes()[es[k] + 1]);
            let h = b - a;
            let mut v = Vec::new();
            for sub in 0..split {
                let (sa, sb) = (a + h * sub as f64 / split as f64, a + h * (sub + 1) as f64 / split as f64);
                for (x, w) in rule.on_interval(sa, sb) {
                    v.push((x, w, local_shape((x - a) / h, h, 0)));
                }
            }
            v
        })
        .collect();
    let globals: Vec<[Option<usize>; 4]> = (0..3)
        .map(|k| [0, 1, 2, 3].map(|l| axes[k].local_to_global(es[k], l)))
        .collect();
    for (x, wx, sx) in &pts[0] {
        for (y, wy, sy) in &pts[1] {
            for (z, wz, sz) in &pts[2] {
                let mut psi = [C::new(0.0, 0.0); 4];
                for (la, ga) in globals[0].iter().enumerate() {
                    let Some(ga) = ga else { continue };
                    for (lb, gb) in globals[1].iter().enumerate() {
                        let Some(gb) = gb else { continue };
                        let fab = sx[la] * sy[lb];
                        for (lc, gc) in globals[2].iter().enumerate() {
                            let Some(gc) = gc else { continue };
                            let f = fab * sz[lc];
                            let base = ((ga * dims[1] + gb) * dims[2] + gc) * 4;
                            for k in 0..4 {
                                psi[k] += coeffs[base + k] * f;
                            }
                        }
                    }
                }
                let rho: f64 = psi.iter().map(|c| c.norm_sqr()).sum::<f64>() * wx * wy * wz;
                if plane.side([*x, *y, *z]) > 0.0 {
                    plus += rho;
                } else {
                    minus += rho;
                }
            }
        }
    }
    (plus, minus)
}

/// Density on the projectile side of `plane`.
pub fn charge_transfer_3d(grid: &CartGrid3D, field: &SpinorField3D, plane: &DividePlane) -> Result<f64> {
    Ok(half_space_norms(grid, field, plane)?.0)
}

/// Crank-Nicolson propagation of `initial` over `tg`, optionally resuming
/// from a checkpoint and writing new ones.
///
/// The probabilities hold the survival `|<initial|S|C(T)>|^2` and the
/// density beyond the perpendicular bisector of the final internuclear
/// segment.
#[allow(clippy::too_many_arguments)]
pub fn propagate_3d(
    solver: &CartesianSolver,
    traj: &Trajectory,
    tg: &TimeGrid,
    initial: &SpinorField3D,
    opts: &TensorRunOptions,
    resume: Option<&Checkpoint>,
    policy: Option<&CheckpointPolicy>,
) -> Result<PropagationResult> {
    let mut res = propagate_checkpointed(
        &solver.grid.descriptor(),
        &solver.overlap,
        |t| solver.hamiltonian_at(traj, t),
        tg,
        &initial.coeffs,
        opts,
        resume,
        policy,
    )?;
    let final_field = SpinorField3D {
        coeffs: res.final_coefficients.clone(),
    };
    let s_init = solver.overlap.apply(&initial.coeffs)?;
    res.probabilities.p_1s = Some(dot(&s_init, &final_field.coeffs).norm_sqr());
    let plane = DividePlane::bisecting(traj.position(tg.t_end));
    res.probabilities.p_ct = Some(charge_transfer_3d(&solver.grid, &final_field, &plane)?);
    Ok(res)
}
