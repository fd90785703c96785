//! Head-on (axially symmetric) reduction in cylindrical coordinates.
//!
//! With both nuclei on the `z` axis the total angular momentum projection
//! `m` is conserved. Writing the bispinor as
//!
//! ```text
//! psi = (2 pi rho)^(-1/2) (U1 e^{i(m-1/2)phi}, U2 e^{i(m+1/2)phi}, i U3 e^{i(m-1/2)phi}, i U4 e^{i(m+1/2)phi})
//! ```
//!
//! leaves a four-component problem in `(rho, z)` whose inner product is a
//! plain double integral. The operator (rest energy subtracted) is
//!
//! ```text
//!        | V       0       c d_z    K     |
//! H_C =  | 0       V      -K^+     -c d_z |
//!        | -c d_z -K       V-2c^2   0     |
//!        | K^+     c d_z   0        V-2c^2|      K = c (d_rho + m / rho)
//! ```
//!
//! Each component is expanded in `s(z) s(rho)` products. The target sits at
//! the origin; the projectile moves along the axis at the distance
//! `R(t) = sqrt((v t)^2 + b^2)`.

use std::sync::Arc;

use num_complex::Complex64;

use crate::checkpoint::{propagate_checkpointed, Checkpoint, CheckpointPolicy, GridDescriptor};
use crate::fields::{CollisionSystem, Trajectory};
use crate::grid_basis::{
    assemble_first_derivative, assemble_overlap, assemble_partial_overlap, assemble_weighted, eval_spline,
    Grid1D, SplineId, DEFAULT_QUADRATURE_ORDER,
};
use crate::linalg::eigen::{shift_invert, ShiftInvertOptions};
use crate::linalg::kron::{apply_axis, KroneckerOverlap, TensorShape};
use crate::linalg::sparse::SparseMatrix;
use crate::linalg::{dot, BandedRealMatrix};
use crate::propagation::{PropagationResult, TimeGrid};
use crate::tensor::{KronTerm, TensorHamiltonian, TensorRunOptions, WindowPotential};
use crate::units::{fm_to_bohr, point_nucleus_1s_energy, REST_ENERGY, SPEED_OF_LIGHT};
use crate::{Error, Result};

type C = Complex64;

/// Basis of the cylindrical problem. Axis 0 of the tensor layout is `z`,
/// axis 1 is `rho`.
#[derive(Clone, Debug, PartialEq)]
pub struct CylGrid {
    pub rho: Grid1D,
    pub z: Grid1D,
    pub m: f64,
}

impl CylGrid {
    pub fn new(rho: Grid1D, z: Grid1D, m: f64) -> Result<Self> {
        if rho.start() != 0.0 {
            return Err(Error::InvalidGrid(format!(
                "rho grid must start at 0, starts at {}",
                rho.start()
            )));
        }
        if (2.0 * m).fract() != 0.0 || (2.0 * m) as i64 % 2 == 0 {
            return Err(Error::InvalidArgument(format!("m = {m} is not half-integer")));
        }
        if !(z.start() < 0.0 && z.end() > 0.0) {
            return Err(Error::InvalidGrid("z grid must contain the target at z = 0".into()));
        }
        Ok(Self { rho, z, m })
    }

    /// Uniform grid with `m = 1/2`; lengths in fm.
    pub fn uniform_fm(rho_max: f64, rho_splines: usize, z_lo: f64, z_hi: f64, z_splines: usize) -> Result<Self> {
        let rho = Grid1D::uniform(0.0, fm_to_bohr(rho_max), intervals_for(rho_splines)?)?;
        let z = Grid1D::uniform(fm_to_bohr(z_lo), fm_to_bohr(z_hi), intervals_for(z_splines)?)?;
        Self::new(rho, z, 0.5)
    }

    /// 200 x 52 splines in a 20000 x 5000 fm box, target 5000 fm from the
    /// centre towards the incoming projectile.
    pub fn production() -> Self {
        Self::uniform_fm(5000.0, 52, -5000.0, 15000.0, 200).expect("valid grid")
    }

    /// Reduced box with the production spacing: 100 x 26 splines,
    /// 10000 x 2500 fm.
    pub fn desk() -> Self {
        Self::uniform_fm(2500.0, 26, -2500.0, 7500.0, 100).expect("valid grid")
    }

    pub fn shape(&self) -> TensorShape {
        TensorShape::new(vec![self.z.basis_len(), self.rho.basis_len()], 4)
    }

    pub fn len(&self) -> usize {
        self.shape().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Distance from the target to the nearer end of the `z` box.
    pub fn clearance(&self) -> f64 {
        (-self.z.start()).min(self.z.end())
    }

    /// Layout stamp stored in checkpoints.
    pub fn descriptor(&self) -> GridDescriptor {
        GridDescriptor::new(&[&self.z, &self.rho], 4)
    }

    /// Projectile `z` at the end of a default run: the clearance away from
    /// the far end of the box.
    pub fn exit_z(&self) -> f64 {
        self.z.end() - self.clearance()
    }
}

/// Number of intervals giving `splines` basis functions (two per interior node).
pub(crate) fn intervals_for(splines: usize) -> Result<usize> {
    if splines < 2 || splines % 2 != 0 {
        return Err(Error::InvalidGrid(format!(
            "spline count must be even and at least 2, got {splines}"
        )));
    }
    Ok(splines / 2 + 1)
}

/// Coefficients `C^k` of the four components, in the layout of
/// [`CylGrid::shape`].
#[derive(Clone, Debug, PartialEq)]
pub struct SpinorField2D {
    pub coeffs: Vec<C>,
}

/// Time-independent pieces of the cylindrical problem.
#[derive(Clone, Debug)]
pub struct AxialSolver {
    grid: CylGrid,
    system: CollisionSystem,
    overlap: KroneckerOverlap,
    kinetic: Vec<KronTerm>,
    v_target: WindowPotential,
    quadrature_order: usize,
}

impl AxialSolver {
    pub fn new(grid: CylGrid, system: CollisionSystem) -> Result<Self> {
        system.validate()?;
        let order = DEFAULT_QUADRATURE_ORDER;
        let kinetic = kinetic_terms(&grid)?;
        let overlap = KroneckerOverlap::new(vec![assemble_overlap(&grid.z), assemble_overlap(&grid.rho)], 4)?;
        let v_target = cylindrical_potential(&grid, order, |rho, z| system.target_potential(rho.hypot(z)))?;
        Ok(Self {
            grid,
            system,
            overlap,
            kinetic,
            v_target,
            quadrature_order: order,
        })
    }

    pub fn grid(&self) -> &CylGrid {
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

    /// `H_C(t)` with the projectile on the axis.
    pub fn hamiltonian_at(&self, traj: &Trajectory, t: f64) -> Result<TensorHamiltonian> {
        let mut h = self.target_hamiltonian();
        if self.system.z_b != 0.0 {
            let zb = traj.axial_position(t);
            let vb = cylindrical_potential(&self.grid, self.quadrature_order, |rho, z| {
                self.system.projectile_potential(rho.hypot(z - zb))
            })?;
            h.potential_mut().add_scaled(1.0, &vb);
        }
        Ok(h)
    }

    /// Path with the projectile entering at the near end of the box; the run
    /// is symmetric about the closest approach.
    pub fn trajectory(&self, b: f64) -> Result<Trajectory> {
        Trajectory::starting_at_distance(self.system.velocity(), b, self.grid.clearance())
    }

    /// From the start of `traj` until the projectile is near `exit_z`.
    pub fn time_grid(&self, traj: &Trajectory, steps: usize) -> TimeGrid {
        TimeGrid::through_zero(traj.start_time(), self.grid.exit_z() / traj.v, steps)
    }

    /// Lowest `m = 1/2` bound state of the target alone.
    pub fn initial_state(&self) -> Result<(SpinorField2D, f64)> {
        initial_state_2d(self)
    }

    /// Propagates `initial` through the collision with impact parameter `b`
    /// (bohr) and evaluates the survival and charge-transfer probabilities.
    pub fn run(&self, b: f64, steps: usize, initial: &SpinorField2D, opts: &TensorRunOptions) -> Result<PropagationResult> {
        let traj = self.trajectory(b)?;
        let tg = self.time_grid(&traj, steps);
        propagate_2d(self, &traj, &tg, initial, opts, None, None)
    }
}

/// Gauss points per element for the `1/rho` matrix.
const INVERSE_RHO_ORDER: usize = 16;

fn kinetic_terms(grid: &CylGrid) -> Result<Vec<KronTerm>> {
    let c = SPEED_OF_LIGHT;
    let sz = Arc::new(assemble_overlap(&grid.z));
    let srho = Arc::new(assemble_overlap(&grid.rho));
    let dz = Arc::new(assemble_first_derivative(&grid.z));
    let drho = assemble_first_derivative(&grid.rho);
    let inv_rho = assemble_weighted(&grid.rho, INVERSE_RHO_ORDER, |r| 1.0 / r)?;
    let k = drho.add_scaled(grid.m, &inv_rho);
    let mut k = k;
    k.scale(c);
    let kt = Arc::new(k.transpose());
    let k = Arc::new(k);
    let zero = C::new(0.0, 0.0);
    let real = |v: f64| C::new(v, 0.0);
    let mut dzc = [[zero; 4]; 4];
    dzc[0][2] = real(c);
    dzc[1][3] = real(-c);
    dzc[2][0] = real(-c);
    dzc[3][1] = real(c);
    let mut kc = [[zero; 4]; 4];
    kc[0][3] = real(1.0);
    kc[2][1] = real(-1.0);
    let mut ktc = [[zero; 4]; 4];
    ktc[1][2] = real(-1.0);
    ktc[3][0] = real(1.0);
    let mut mass = [[zero; 4]; 4];
    mass[2][2] = real(-2.0 * REST_ENERGY);
    mass[3][3] = real(-2.0 * REST_ENERGY);
    Ok(vec![
        KronTerm {
            factors: vec![dz, srho.clone()],
            coupling: dzc,
        },
        KronTerm {
            factors: vec![sz.clone(), k],
            coupling: kc,
        },
        KronTerm {
            factors: vec![sz.clone(), kt],
            coupling: ktc,
        },
        KronTerm {
            factors: vec![sz, srho],
            coupling: mass,
        },
    ])
}

/// Galerkin matrix of a potential `v(rho, z)`.
pub fn cylindrical_potential<F>(grid: &CylGrid, order: usize, v: F) -> Result<WindowPotential>
where
    F: Fn(f64, f64) -> Result<f64> + Sync,
{
    WindowPotential::assemble(&[&grid.z, &grid.rho], order, |p| v(p[1], p[0]).unwrap_or(f64::NAN))
}

/// Explicit `H_C` for the potential `v(rho, z)`.
pub fn assemble_hc<F>(grid: &CylGrid, v: F) -> Result<SparseMatrix<C>>
where
    F: Fn(f64, f64) -> Result<f64> + Sync,
{
    let pot = cylindrical_potential(grid, DEFAULT_QUADRATURE_ORDER, v)?;
    let h = TensorHamiltonian::new(grid.shape(), kinetic_terms(grid)?, pot)?;
    SparseMatrix::from_triplets(grid.len(), h.triplets())
}

/// Explicit overlap `S_z (x) S_rho (x) I_4`.
pub fn explicit_overlap(shape: &TensorShape, factors: &[BandedRealMatrix]) -> BandedRealMatrix {
    let zero = C::new(0.0, 0.0);
    let mut id = [[zero; 4]; 4];
    for (k, row) in id.iter_mut().enumerate().take(shape.components) {
        row[k] = C::new(1.0, 0.0);
    }
    let term = KronTerm {
        factors: factors.iter().cloned().map(Arc::new).collect(),
        coupling: id,
    };
    let h = TensorHamiltonian::new(shape.clone(), vec![term], WindowPotential::zeros(shape.dims.clone()))
        .expect("shapes agree by construction");
    h.to_banded_real()
}

/// Lowest bound state of the target alone by shift-invert iteration on the
/// explicit band matrices, shifted to the point-nucleus Dirac energy.
pub fn initial_state_2d(solver: &AxialSolver) -> Result<(SpinorField2D, f64)> {
    let grid = &solver.grid;
    let shape = grid.shape();
    let h = solver.target_hamiltonian().to_banded_real();
    let s = explicit_overlap(&shape, solver.overlap.factors());
    let z = solver.system.z_a;
    // start from a hydrogen-like large component
    let (nz, nr) = (grid.z.basis_len(), grid.rho.basis_len());
    let mut x = vec![0.0; shape.len()];
    for iz in (0..nz).step_by(2) {
        let zc = grid.z.nodes()[iz / 2 + 1];
        for ir in (0..nr).step_by(2) {
            let rc = grid.rho.nodes()[ir / 2 + 1];
            x[(iz * nr + ir) * 4] = rc.sqrt() * (-z * rc.hypot(zc)).exp();
        }
    }
    if x.iter().all(|&v| v == 0.0) {
        x[0] = 1.0;
    }
    let sigma = point_nucleus_1s_energy(z);
    let opts = ShiftInvertOptions {
        tol: 1e-10,
        ..Default::default()
    };
    let energy = shift_invert(&h, &s, sigma, &mut x, &opts)?;
    let coeffs: Vec<C> = x.iter().map(|&v| C::new(v, 0.0)).collect();
    Ok((SpinorField2D { coeffs }, energy))
}

/// Crank-Nicolson propagation of `initial` over `tg`, optionally resuming
/// from a checkpoint and writing new ones.
///
/// The probabilities hold the survival `|<initial|S|C(T)>|^2` and the
/// density beyond the plane halfway between the nuclei at the final time.
#[allow(clippy::too_many_arguments)]
pub fn propagate_2d(
    solver: &AxialSolver,
    traj: &Trajectory,
    tg: &TimeGrid,
    initial: &SpinorField2D,
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
    let final_field = SpinorField2D {
        coeffs: res.final_coefficients.clone(),
    };
    let s_init = solver.overlap.apply(&initial.coeffs)?;
    res.probabilities.p_1s = Some(dot(&s_init, &final_field.coeffs).norm_sqr());
    let z_divide = 0.5 * traj.axial_position(tg.t_end);
    res.probabilities.p_ct = Some(charge_transfer_2d(solver, &final_field, z_divide)?);
    Ok(res)
}

/// Density in `z > z_divide` (`z < z_divide` when `z_divide` is negative),
/// integrated over `rho`.
pub fn charge_transfer_2d(solver: &AxialSolver, field: &SpinorField2D, z_divide: f64) -> Result<f64> {
    let (lo, hi) = half_space(&solver.grid.z, z_divide);
    half_space_norm(solver, field, lo, hi)
}

/// Density in the slab `lo < z < hi`.
pub fn half_space_norm(solver: &AxialSolver, field: &SpinorField2D, lo: f64, hi: f64) -> Result<f64> {
    let shape = solver.grid.shape();
    if field.coeffs.len() != shape.len() {
        return Err(Error::LengthMismatch {
            expected: shape.len(),
            actual: field.coeffs.len(),
        });
    }
    let sz = assemble_partial_overlap(&solver.grid.z, lo, hi);
    let srho = &solver.overlap.factors()[1];
    let mut y = field.coeffs.clone();
    apply_axis(&shape, 0, &mut y, |p| {
        let src = p.to_vec();
        sz.mul_complex_into(&src, p);
    });
    apply_axis(&shape, 1, &mut y, |p| {
        let src = p.to_vec();
        srho.mul_complex_into(&src, p);
    });
    Ok(dot(&field.coeffs, &y).re)
}

/// `U^k(rho, z)`; the density is `sum_k |U^k|^2 / (2 pi rho)`.
pub fn evaluate_2d(grid: &CylGrid, field: &SpinorField2D, rho: f64, z: f64) -> [C; 4] {
    let n_rho = grid.rho.basis_len();
    let mut out = [C::new(0.0, 0.0); 4];
    for iz in 0..grid.z.basis_len() {
        let fz = eval_spline(&grid.z, SplineId::from_index(iz), z, 0);
        if fz == 0.0 {
            continue;
        }
        for ir in 0..n_rho {
            let f = fz * eval_spline(&grid.rho, SplineId::from_index(ir), rho, 0);
            if f != 0.0 {
                let base = (iz * n_rho + ir) * 4;
                for k in 0..4 {
                    out[k] += field.coeffs[base + k] * f;
                }
            }
        }
    }
    out
}

/// The part of the `z` grid on the far side of `z_divide` from the target.
pub(crate) fn half_space(z: &Grid1D, z_divide: f64) -> (f64, f64) {
    if z_divide >= 0.0 {
        (z_divide, z.end())
    } else {
        (z.start(), z_divide)
    }
}
