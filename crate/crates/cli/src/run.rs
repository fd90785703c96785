//! Builds the solvers a configuration asks for and turns their results into
//! table rows.

use crate::config::{Geometry, Model, Settings};
use crate::table::Row;
use hermite_dirac::axial::{propagate_2d, AxialSolver, CylGrid, SpinorField2D};
use hermite_dirac::cartesian::{
    initial_state_3d, propagate_3d, relax_initial_state, CartGrid3D, CartesianSolver, SpinorField3D, SplineOrbital,
};
use hermite_dirac::checkpoint::{Checkpoint, CheckpointPolicy, GridDescriptor};
use hermite_dirac::fields::{CollisionSystem, NuclearModel};
use hermite_dirac::linalg::BicgstabOptions;
use hermite_dirac::monopole::{radial_grid, MonopoleRunOptions, MonopoleSolver};
use hermite_dirac::propagation::{PropagationResult, TimeSample};
use hermite_dirac::tensor::{TensorEigenOptions, TensorRunOptions};
use hermite_dirac::units::{energy_in_rest_units, fm_to_bohr};
use hermite_dirac::Result;
use rayon::prelude::*;
use std::path::{Path, PathBuf};
use std::time::Instant;

/// Outcome of one impact parameter.
#[derive(Clone, Debug)]
pub struct PointResult {
    pub row: Row,
    pub samples: Vec<TimeSample>,
}

pub fn collision_system(s: &Settings) -> CollisionSystem {
    let model = match s.system.model {
        Model::Point => NuclearModel::Point,
        Model::Sphere => NuclearModel::Sphere {
            rms_radius_fm: s.system.rms_radius_fm,
        },
    };
    CollisionSystem {
        z_a: s.system.z_a,
        z_b: s.system.z_b,
        model_a: model,
        model_b: model,
        energy_per_nucleon: s.system.energy_mev_per_u,
    }
}

fn monopole_solver(s: &Settings) -> Result<MonopoleSolver> {
    let grid = radial_grid(s.system.z_a, fm_to_bohr(s.monopole.box_fm), s.monopole.intervals)?;
    MonopoleSolver::new(collision_system(s), grid)
}

fn axial_solver(s: &Settings) -> Result<AxialSolver> {
    let a = &s.axial;
    let grid = CylGrid::uniform_fm(a.rho_max_fm, a.rho_splines, a.z_lo_fm, a.z_hi_fm, a.z_splines)?;
    AxialSolver::new(grid, collision_system(s))
}

fn cartesian_solver(s: &Settings) -> Result<CartesianSolver> {
    let c = &s.cartesian;
    let grid = CartGrid3D::uniform_fm(c.width_fm, c.splines_xy, c.z_lo_fm, c.z_hi_fm, c.splines_z)?;
    CartesianSolver::new(grid, collision_system(s))
}

/// Interpolated radial 1s, optionally relaxed to the lattice eigenstate.
fn cartesian_initial(s: &Settings, solver: &CartesianSolver) -> Result<(SpinorField3D, f64)> {
    let radial = monopole_solver(s)?;
    let orbital = SplineOrbital::new(radial.channel(), &radial.ground_state())?;
    let field = initial_state_3d(solver.grid(), &orbital)?;
    if s.cartesian.relax {
        relax_initial_state(solver, &field, s.cartesian.relax_shift, &TensorEigenOptions::default())
    } else {
        let e = solver.target_energy(&field)?;
        Ok((field, e))
    }
}

fn energy_row(e: f64) -> Row {
    Row {
        e_au: Some(e),
        e_rest_units: Some(energy_in_rest_units(e)),
        ..Row::default()
    }
}

/// The bound-state energy of the target in the configured geometry.
pub fn stationary(s: &Settings) -> Result<Row> {
    let e = match s.geometry {
        Geometry::Monopole => monopole_solver(s)?.spectrum().ground_energy(),
        Geometry::Axial => axial_solver(s)?.initial_state()?.1,
        Geometry::Cartesian => {
            let solver = cartesian_solver(s)?;
            cartesian_initial(s, &solver)?.1
        }
    };
    Ok(energy_row(e))
}

fn collision_row(b_fm: f64, r: &PropagationResult) -> Row {
    let e = r.closest_approach_energy;
    Row {
        b_fm: Some(b_fm),
        e_au: e,
        e_rest_units: e.map(energy_in_rest_units),
        p_1s: r.probabilities.p_1s,
        p_minus: r.probabilities.p_minus,
        p_bar_1s: r.probabilities.p_bar_1s,
        p_ct: r.probabilities.p_ct,
    }
}

fn tensor_options(tol: f64, sample_every: usize) -> TensorRunOptions {
    TensorRunOptions {
        bicgstab: BicgstabOptions { tol, max_iter: 500 },
        sample_every,
        ..TensorRunOptions::default()
    }
}

/// File name stem for impact parameter `b_fm`.
pub fn point_stem(b_fm: f64) -> String {
    format!("b{b_fm}fm")
}

struct Checkpointing {
    dir: PathBuf,
    every: usize,
    resume: bool,
}

impl Checkpointing {
    fn policy(&self, b_fm: f64) -> Option<CheckpointPolicy> {
        (self.every > 0).then(|| CheckpointPolicy {
            path: self.dir.join(format!("{}.ck", point_stem(b_fm))),
            every: self.every,
            halt_after: None,
        })
    }

    fn resume_from(&self, b_fm: f64, grid: &GridDescriptor) -> Result<Option<Checkpoint>> {
        let path = self.dir.join(format!("{}.ck", point_stem(b_fm)));
        if self.resume && path.exists() {
            log::info!("resuming b = {b_fm} fm from {}", path.display());
            return Checkpoint::restore(&path, grid).map(Some);
        }
        Ok(None)
    }
}

fn run_points<F>(s: &Settings, point: F) -> Result<Vec<PointResult>>
where
    F: Fn(f64) -> Result<PointResult> + Sync,
{
    let timed = |b: f64| {
        let start = Instant::now();
        let r = point(b);
        log::info!("b = {b} fm done in {:.1} s", start.elapsed().as_secs_f64());
        r
    };
    if s.jobs <= 1 {
        return s.b_fm.iter().map(|&b| timed(b)).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(s.jobs)
        .build()
        .map_err(|e| hermite_dirac::Error::InvalidArgument(e.to_string()))?;
    pool.install(|| s.b_fm.par_iter().map(|&b| timed(b)).collect())
}

/// Runs every impact parameter of `s` in its geometry; checkpoints of 2D
/// and 3D runs go to `checkpoint_dir`.
pub fn collisions(s: &Settings, checkpoint_dir: &Path) -> Result<Vec<PointResult>> {
    let ck = Checkpointing {
        dir: checkpoint_dir.to_path_buf(),
        every: s.checkpoint_every,
        resume: s.resume,
    };
    match s.geometry {
        Geometry::Monopole => {
            let solver = monopole_solver(s)?;
            let opts = MonopoleRunOptions {
                steps: s.monopole.steps,
                sample_every: s.monopole.sample_every,
                ..MonopoleRunOptions::default()
            };
            run_points(s, |b_fm| {
                let b = fm_to_bohr(b_fm);
                let r = solver.run(b, &opts)?;
                let mut row = collision_row(b_fm, &r);
                if s.monopole.determinant {
                    row.p_bar_1s = Some(solver.corrected_p1s(b, &opts)?.p_bar_1s);
                }
                Ok(PointResult { row, samples: r.samples })
            })
        }
        Geometry::Axial => {
            let solver = axial_solver(s)?;
            let (initial, e): (SpinorField2D, f64) = solver.initial_state()?;
            log::info!("2D initial state: {} unknowns, E = {e}", solver.grid().len());
            let opts = tensor_options(s.axial.bicgstab_tol, s.axial.sample_every);
            run_points(s, |b_fm| {
                let traj = solver.trajectory(fm_to_bohr(b_fm))?;
                let tg = solver.time_grid(&traj, s.axial.steps);
                let resume = ck.resume_from(b_fm, &solver.grid().descriptor())?;
                let policy = ck.policy(b_fm);
                let r = propagate_2d(&solver, &traj, &tg, &initial, &opts, resume.as_ref(), policy.as_ref())?;
                Ok(PointResult {
                    row: collision_row(b_fm, &r),
                    samples: r.samples,
                })
            })
        }
        Geometry::Cartesian => {
            let solver = cartesian_solver(s)?;
            let (initial, e) = cartesian_initial(s, &solver)?;
            log::info!("3D initial state: {} unknowns, E = {e}", solver.grid().len());
            let opts = tensor_options(s.cartesian.bicgstab_tol, s.cartesian.sample_every);
            run_points(s, |b_fm| {
                let traj = solver.trajectory(fm_to_bohr(b_fm))?;
                let tg = solver.time_grid(&traj, s.cartesian.steps);
                let resume = ck.resume_from(b_fm, &solver.grid().descriptor())?;
                let policy = ck.policy(b_fm);
                let r = propagate_3d(&solver, &traj, &tg, &initial, &opts, resume.as_ref(), policy.as_ref())?;
                Ok(PointResult {
                    row: collision_row(b_fm, &r),
                    samples: r.samples,
                })
            })
        }
    }
}
