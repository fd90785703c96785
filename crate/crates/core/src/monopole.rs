//! Monopole approximation: the radial Dirac equation for one `kappa` channel.
//!
//! The projectile potential is replaced by its spherical average about the
//! target, `-Z_B / max(r, R(t))`, so the problem stays central and the
//! `kappa = -1` channel that holds the initial 1s state is closed. The radial
//! functions `P` and `Q` are each expanded in the spline basis and the two
//! coefficient sets are interleaved, `index = 2 k + component`, which keeps
//! the Hamiltonian banded with half-bandwidth 7:
//!
//! ```text
//! H = | V                    c(-D + kappa W_1/r) |
//!     | c(D + kappa W_1/r)   V - 2 c^2 S         |
//! ```

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::fields::{monopole_potential, CollisionSystem, Trajectory};
use crate::grid_basis::{
    assemble_first_derivative, assemble_overlap, assemble_weighted_split, evaluate, Grid1D,
    DEFAULT_QUADRATURE_ORDER,
};
use crate::linalg::banded::BandedRealMatrix;
use crate::linalg::cn::{s_norm, CnPropagator};
use crate::linalg::eigen::{shift_invert, solve_generalized_eig, ShiftInvertOptions};
use crate::propagation::{Probabilities, PropagationResult, TimeGrid, TimeSample};
use crate::units::{REST_ENERGY, SPEED_OF_LIGHT};
use crate::{Error, Result};

type C = Complex64;

/// Half-bandwidth of the interleaved radial matrices.
pub const RADIAL_HALF_BANDWIDTH: usize = 7;

/// Box radius `19 / Z` in bohr.
pub fn box_radius(z: f64) -> f64 {
    19.0 / z
}

/// Default radial grid: 97 elements (384 splines) on a logarithmic grid out to
/// the box radius.
///
/// The first node is `r_min = 1e-18^(1 / (2 gamma + 1)) / Z` with
/// `gamma = sqrt(1 - (Z/c)^2)`: the 1s density near the origin behaves like
/// `r^(2 gamma)`, so this puts the probability inside the first node at the
/// `1e-18` level for every charge.
pub fn default_grid(z: f64) -> Result<Grid1D> {
    radial_grid(z, box_radius(z), 97)
}

/// Logarithmic grid with the `r_min` rule of [`default_grid`] and a chosen
/// box radius and element count.
pub fn radial_grid(z: f64, r_max: f64, intervals: usize) -> Result<Grid1D> {
    let za = (z / SPEED_OF_LIGHT).min(0.99);
    let gamma = (1.0 - za * za).sqrt();
    let r_min = 1e-18f64.powf(1.0 / (2.0 * gamma + 1.0)) / z;
    Grid1D::semilog(r_min, r_max, intervals, 0.0, 1.0)
}

/// Radial basis for one Dirac channel.
#[derive(Clone, Debug)]
pub struct RadialChannel {
    kappa: i32,
    grid: Grid1D,
    overlap: BandedRealMatrix,
    derivative: BandedRealMatrix,
    inverse_r: BandedRealMatrix,
    /// `S (x) I_2` in the interleaved layout.
    overlap2: BandedRealMatrix,
}

impl RadialChannel {
    pub fn new(grid: Grid1D, kappa: i32) -> Result<Self> {
        if kappa == 0 {
            return Err(Error::InvalidArgument("kappa must be nonzero".into()));
        }
        if !(grid.start() > 0.0) {
            return Err(Error::InvalidGrid("radial grids must start at r > 0".into()));
        }
        let overlap = assemble_overlap(&grid);
        let derivative = assemble_first_derivative(&grid);
        let inverse_r = assemble_weighted_split(&grid, DEFAULT_QUADRATURE_ORDER, &[], |r| 1.0 / r)?;
        let overlap2 = interleave_diagonal(&overlap, &overlap);
        Ok(Self {
            kappa,
            grid,
            overlap,
            derivative,
            inverse_r,
            overlap2,
        })
    }

    pub fn kappa(&self) -> i32 {
        self.kappa
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    /// Number of coefficients, both components.
    pub fn len(&self) -> usize {
        2 * self.grid.basis_len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Scalar overlap `S`.
    pub fn spline_overlap(&self) -> &BandedRealMatrix {
        &self.overlap
    }

    /// `S (x) I_2`, interleaved.
    #[allow(clippy::misnamed_getters)]
    pub fn overlap(&self) -> &BandedRealMatrix {
        &self.overlap2
    }

    /// Matrix of a radial potential, with elements split at `breakpoints`.
    pub fn potential_matrix<F>(&self, breakpoints: &[f64], v: F) -> Result<BandedRealMatrix>
    where
        F: Fn(f64) -> f64 + Sync,
    {
        assemble_weighted_split(&self.grid, DEFAULT_QUADRATURE_ORDER, breakpoints, v)
    }
}

fn interleave_diagonal(pp: &BandedRealMatrix, qq: &BandedRealMatrix) -> BandedRealMatrix {
    let n = pp.dim();
    let mut out = BandedRealMatrix::zeros(2 * n, RADIAL_HALF_BANDWIDTH, RADIAL_HALF_BANDWIDTH);
    for i in 0..n {
        for (j, v) in pp.row(i) {
            out.add(2 * i, 2 * j, v);
        }
        for (j, v) in qq.row(i) {
            out.add(2 * i + 1, 2 * j + 1, v);
        }
    }
    out
}

/// Radial Dirac matrix for the potential matrix `v` (rest energy subtracted).
pub fn assemble_radial_hamiltonian(ch: &RadialChannel, v: &BandedRealMatrix) -> BandedRealMatrix {
    let c = SPEED_OF_LIGHT;
    let kappa = ch.kappa as f64;
    let n = ch.grid.basis_len();
    let mut h = BandedRealMatrix::zeros(2 * n, RADIAL_HALF_BANDWIDTH, RADIAL_HALF_BANDWIDTH);
    for i in 0..n {
        for (j, vij) in v.row(i) {
            let s = ch.overlap.get(i, j);
            let d = ch.derivative.get(i, j);
            let w = ch.inverse_r.get(i, j);
            h.add(2 * i, 2 * j, vij);
            h.add(2 * i, 2 * j + 1, c * (-d + kappa * w));
            h.add(2 * i + 1, 2 * j, c * (d + kappa * w));
            h.add(2 * i + 1, 2 * j + 1, vij - 2.0 * REST_ENERGY * s);
        }
    }
    h
}

/// Adds the potential matrix `v` to both diagonal blocks of `h`.
fn add_potential(h: &BandedRealMatrix, v: &BandedRealMatrix) -> BandedRealMatrix {
    let mut out = h.clone();
    for i in 0..v.dim() {
        for (j, vij) in v.row(i) {
            out.add(2 * i, 2 * j, vij);
            out.add(2 * i + 1, 2 * j + 1, vij);
        }
    }
    out
}

/// Coefficients of a radial spinor, interleaved `(P_0, Q_0, P_1, Q_1, ..)`.
#[derive(Clone, Debug, PartialEq)]
pub struct RadialState {
    pub coeffs: Vec<C>,
}

impl RadialState {
    pub fn large(&self) -> Vec<C> {
        self.coeffs.iter().step_by(2).copied().collect()
    }

    pub fn small(&self) -> Vec<C> {
        self.coeffs.iter().skip(1).step_by(2).copied().collect()
    }

    pub fn norm(&self, ch: &RadialChannel) -> f64 {
        s_norm(ch.overlap(), &self.coeffs)
    }

    /// `P(r)` and `Q(r)` (or their derivatives).
    pub fn eval(&self, ch: &RadialChannel, r: f64, deriv: u8) -> (C, C) {
        (
            evaluate(&ch.grid, &self.large(), r, deriv),
            evaluate(&ch.grid, &self.small(), r, deriv),
        )
    }
}

/// Eigenpairs of a stationary radial Hamiltonian.
#[derive(Clone, Debug)]
pub struct SpectralBasis {
    /// Ascending.
    pub values: Vec<f64>,
    /// S-orthonormal eigenvectors, one per column.
    pub vectors: DMatrix<f64>,
    /// Number of states with `e <= -2 c^2`; they come first.
    pub negative_count: usize,
}

impl SpectralBasis {
    /// Index of the lowest state above `-2 c^2`.
    pub fn ground_index(&self) -> usize {
        self.negative_count
    }

    pub fn ground_energy(&self) -> f64 {
        self.values[self.ground_index()]
    }

    pub fn state(&self, i: usize) -> RadialState {
        RadialState {
            coeffs: self.vectors.column(i).iter().map(|&v| C::new(v, 0.0)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Large-component weight `C_P^T S C_P` of every eigenvector.
pub fn large_component_weights(ch: &RadialChannel, basis: &SpectralBasis) -> Vec<f64> {
    let n = ch.grid.basis_len();
    (0..basis.len())
        .map(|col| {
            let v = basis.vectors.column(col);
            let p: Vec<f64> = (0..n).map(|k| v[2 * k]).collect();
            let sp = ch.overlap.mul_vec(&p);
            p.iter().zip(&sp).map(|(a, b)| a * b).sum()
        })
        .collect()
}

/// Rejects eigenvectors dominated by the wrong component for their branch.
///
/// States in the negative continuum must be mostly small component and all
/// others mostly large component. Far above the rest energy the two weights
/// approach one half, so weights within `1e-6` of one half are accepted on
/// either branch.
pub fn screen_spurious(ch: &RadialChannel, basis: &SpectralBasis) -> Result<()> {
    const MARGIN: f64 = 1e-6;
    for (index, w) in large_component_weights(ch, basis).into_iter().enumerate() {
        let energy = basis.values[index];
        let negative = energy <= -2.0 * REST_ENERGY;
        let wrong = if negative { w > 0.5 + MARGIN } else { w < 0.5 - MARGIN };
        if wrong {
            return Err(Error::SpuriousState {
                index,
                energy,
                large_weight: w,
            });
        }
    }
    Ok(())
}

/// Full spectrum of the target Hamiltonian built from the potential matrix
/// `v_target`, screened for spurious states. The 1s eigenpair is polished by
/// inverse iteration.
pub fn stationary_states(ch: &RadialChannel, v_target: &BandedRealMatrix) -> Result<SpectralBasis> {
    let h = assemble_radial_hamiltonian(ch, v_target);
    spectrum_of(ch, &h)
}

fn spectrum_of(ch: &RadialChannel, h: &BandedRealMatrix) -> Result<SpectralBasis> {
    let s = ch.overlap();
    let eig = solve_generalized_eig(&h.to_dense(), &s.to_dense())?;
    let negative_count = eig.values.iter().take_while(|&&e| e <= -2.0 * REST_ENERGY).count();
    let mut basis = SpectralBasis {
        values: eig.values,
        vectors: eig.vectors,
        negative_count,
    };
    if negative_count < basis.len() {
        let g = basis.ground_index();
        let mut x: Vec<f64> = basis.vectors.column(g).iter().copied().collect();
        let e = shift_invert(h, s, basis.values[g], &mut x, &ShiftInvertOptions::default())?;
        let sign = if x.iter().zip(basis.vectors.column(g).iter()).map(|(a, b)| a * b).sum::<f64>() < 0.0 {
            -1.0
        } else {
            1.0
        };
        basis.values[g] = e;
        for (k, v) in x.into_iter().enumerate() {
            basis.vectors[(k, g)] = sign * v;
        }
    }
    screen_spurious(ch, &basis)?;
    Ok(basis)
}

/// `C^H H C / C^H S C`.
pub fn expectation_energy(ch: &RadialChannel, state: &RadialState, h: &BandedRealMatrix) -> f64 {
    let hc = h.mul_complex(&state.coeffs);
    let num: f64 = state.coeffs.iter().zip(&hc).map(|(a, b)| (a.conj() * b).re).sum();
    num / state.norm(ch)
}

/// `|v_j^T S C|^2` for every eigenvector `v_j`.
pub fn transition_probabilities(ch: &RadialChannel, state: &RadialState, basis: &SpectralBasis) -> Vec<f64> {
    let sc = ch.overlap().mul_complex(&state.coeffs);
    (0..basis.len())
        .into_par_iter()
        .map(|j| {
            basis
                .vectors
                .column(j)
                .iter()
                .zip(&sc)
                .fold(C::new(0.0, 0.0), |acc, (&v, s)| acc + s * v)
                .norm_sqr()
        })
        .collect()
}

/// Total population of the states with `e <= -2 c^2`.
pub fn negative_continuum_probability(ch: &RadialChannel, state: &RadialState, basis: &SpectralBasis) -> f64 {
    transition_probabilities(ch, state, basis)[..basis.negative_count]
        .iter()
        .sum()
}

/// Settings of a monopole collision run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MonopoleRunOptions {
    /// Crank-Nicolson steps over the symmetric time span; must be even so
    /// that one step lands on the closest approach.
    pub steps: usize,
    /// Relative norm drift that aborts the run.
    pub norm_limit: f64,
    /// Record a time sample every this many steps (0 records only the ends).
    pub sample_every: usize,
}

impl Default for MonopoleRunOptions {
    fn default() -> Self {
        Self {
            steps: 10_000,
            norm_limit: 1e-6,
            sample_every: 100,
        }
    }
}

/// Target-centered monopole problem for one collision system.
#[derive(Clone, Debug)]
pub struct MonopoleSolver {
    channel: RadialChannel,
    system: CollisionSystem,
    h_target: BandedRealMatrix,
    spectrum: SpectralBasis,
}

impl MonopoleSolver {
    /// Builds the `kappa = -1` channel on `grid` and diagonalizes the target.
    pub fn new(system: CollisionSystem, grid: Grid1D) -> Result<Self> {
        system.validate()?;
        let channel = RadialChannel::new(grid, -1)?;
        let breaks: Vec<f64> = system.model_a.radius().into_iter().collect();
        let v_a = channel.potential_matrix(&breaks, |r| {
            system.target_potential(r).unwrap_or(f64::NAN)
        })?;
        let h_target = assemble_radial_hamiltonian(&channel, &v_a);
        let spectrum = spectrum_of(&channel, &h_target)?;
        Ok(Self {
            channel,
            system,
            h_target,
            spectrum,
        })
    }

    pub fn channel(&self) -> &RadialChannel {
        &self.channel
    }

    pub fn system(&self) -> &CollisionSystem {
        &self.system
    }

    pub fn spectrum(&self) -> &SpectralBasis {
        &self.spectrum
    }

    pub fn target_hamiltonian(&self) -> &BandedRealMatrix {
        &self.h_target
    }

    pub fn ground_state(&self) -> RadialState {
        self.spectrum.state(self.spectrum.ground_index())
    }

    /// Straight-line path through the box: it starts and ends where the
    /// internuclear distance equals the box radius.
    pub fn trajectory(&self, b: f64) -> Result<Trajectory> {
        let r_box = self.channel.grid.end();
        Trajectory::starting_at_distance(self.system.velocity(), b, r_box)
    }

    pub fn time_grid(&self, traj: &Trajectory, steps: usize) -> TimeGrid {
        let t_end = traj.time_at_distance(self.channel.grid.end());
        TimeGrid::uniform(-t_end, t_end, steps)
    }

    /// Projectile monopole matrix at distance `big_r`.
    pub fn projectile_matrix(&self, big_r: f64) -> Result<BandedRealMatrix> {
        let z = self.system.z_b;
        monopole_potential(z, big_r, 0.0)?;
        self.channel.potential_matrix(&[big_r], move |r| -z / r.max(big_r))
    }

    /// `H(t)` for the given path.
    pub fn hamiltonian_at(&self, traj: &Trajectory, t: f64) -> Result<BandedRealMatrix> {
        if self.system.z_b == 0.0 {
            return Ok(self.h_target.clone());
        }
        let vb = self.projectile_matrix(traj.distance(t))?;
        Ok(add_potential(&self.h_target, &vb))
    }

    /// Propagates the 1s state through the collision with impact parameter
    /// `b` (bohr) and projects the final state on the target spectrum.
    pub fn run(&self, b: f64, opts: &MonopoleRunOptions) -> Result<PropagationResult> {
        let traj = self.trajectory(b)?;
        propagate_monopole(self, &traj, opts, self.ground_state())
    }

    /// One-electron and determinant-corrected 1s populations.
    pub fn corrected_p1s(&self, b: f64, opts: &MonopoleRunOptions) -> Result<CorrectedP1s> {
        let traj = self.trajectory(b)?;
        corrected_p1s(self, &traj, opts)
    }
}

/// Crank-Nicolson propagation of `initial` along `traj`.
pub fn propagate_monopole(
    solver: &MonopoleSolver,
    traj: &Trajectory,
    opts: &MonopoleRunOptions,
    initial: RadialState,
) -> Result<PropagationResult> {
    let ch = &solver.channel;
    if initial.coeffs.len() != ch.len() {
        return Err(Error::LengthMismatch {
            expected: ch.len(),
            actual: initial.coeffs.len(),
        });
    }
    let grid = checked_time_grid(solver, traj, opts)?;
    let s = ch.overlap();
    let mut c = initial.coeffs;
    let norm0 = s_norm(s, &c);
    let mut samples = Vec::new();
    let mut max_drift = 0.0f64;
    let mut e_min = None;
    let mut scratch = Vec::new();
    let sample = |k: usize, c: &[C]| -> Result<TimeSample> {
        let t = grid.time(k);
        let h = solver.hamiltonian_at(traj, t)?;
        let state = RadialState { coeffs: c.to_vec() };
        Ok(TimeSample {
            t,
            norm: s_norm(s, c),
            energy: expectation_energy(ch, &state, &h),
        })
    };
    samples.push(sample(0, &c)?);
    for k in 0..grid.steps {
        let dt = grid.width(k);
        let t_mid = grid.time(k) + 0.5 * dt;
        let h = solver.hamiltonian_at(traj, t_mid)?.to_complex();
        let prop = CnPropagator::new(&h, s, dt)?;
        prop.apply_in_place(&mut c, &mut scratch);
        let norm = s_norm(s, &c);
        let drift = ((norm - norm0) / norm0).abs();
        max_drift = max_drift.max(drift);
        if !(drift <= opts.norm_limit) {
            return Err(Error::NormDrift {
                drift,
                limit: opts.norm_limit,
                time: grid.time(k + 1),
            });
        }
        let step = k + 1;
        if Some(step) == grid.zero_crossing() {
            let h0 = solver.hamiltonian_at(traj, 0.0)?;
            e_min = Some(expectation_energy(ch, &RadialState { coeffs: c.clone() }, &h0));
        }
        if step == grid.steps || (opts.sample_every > 0 && step % opts.sample_every == 0) {
            samples.push(sample(step, &c)?);
        }
    }
    let final_state = RadialState { coeffs: c };
    let probs = transition_probabilities(ch, &final_state, &solver.spectrum);
    let g = solver.spectrum.ground_index();
    Ok(PropagationResult {
        samples,
        final_time: grid.t_end,
        steps: grid.steps,
        max_norm_drift: max_drift,
        closest_approach_energy: e_min,
        probabilities: Probabilities {
            p_1s: Some(probs[g]),
            p_minus: Some(probs[..g].iter().sum()),
            ..Default::default()
        },
        inner_iterations: 0,
        final_coefficients: final_state.coeffs,
    })
}

fn checked_time_grid(solver: &MonopoleSolver, traj: &Trajectory, opts: &MonopoleRunOptions) -> Result<TimeGrid> {
    if opts.steps == 0 || opts.steps % 2 != 0 {
        return Err(Error::InvalidArgument(format!(
            "step count must be even and positive, got {}",
            opts.steps
        )));
    }
    if traj.b.abs() >= solver.channel.grid.end() {
        return Err(Error::InvalidArgument(format!(
            "impact parameter {} lies outside the box radius {}",
            traj.b,
            solver.channel.grid.end()
        )));
    }
    Ok(solver.time_grid(traj, opts.steps))
}

/// Populations with and without the many-electron correction.
#[derive(Clone, Debug)]
pub struct CorrectedP1s {
    /// One-electron 1s population.
    pub p_1s: f64,
    /// `|det M|^2` with `M_kl = <v_k | S | C^(l)>` over the 1s and all
    /// negative-continuum states.
    pub p_bar_1s: f64,
    /// `ln |det M|`.
    pub log_abs_det: f64,
    /// Largest deviation of `C^(k)H S C^(l)` from the identity at the end.
    pub orthogonality_defect: f64,
    /// Largest relative norm drift over all propagated vectors.
    pub max_norm_drift: f64,
}

/// Propagates the 1s state and every negative-continuum state together and
/// evaluates the determinant of their final overlaps with the same set of
/// unperturbed states.
pub fn corrected_p1s(solver: &MonopoleSolver, traj: &Trajectory, opts: &MonopoleRunOptions) -> Result<CorrectedP1s> {
    let grid = checked_time_grid(solver, traj, opts)?;
    let ch = &solver.channel;
    let s = ch.overlap();
    let spec = &solver.spectrum;
    let g = spec.ground_index();
    let occupied: Vec<usize> = std::iter::once(g).chain(0..g).collect();
    let mut vecs: Vec<Vec<C>> = occupied.iter().map(|&k| spec.state(k).coeffs).collect();
    let norms0: Vec<f64> = vecs.iter().map(|v| s_norm(s, v)).collect();
    let mut max_drift = 0.0f64;
    for k in 0..grid.steps {
        let dt = grid.width(k);
        let h = solver.hamiltonian_at(traj, grid.time(k) + 0.5 * dt)?.to_complex();
        let prop = CnPropagator::new(&h, s, dt)?;
        vecs.par_iter_mut().for_each_init(Vec::new, |scratch, v| prop.apply_in_place(v, scratch));
        if (k + 1) % 100 == 0 || k + 1 == grid.steps {
            for (v, n0) in vecs.iter().zip(&norms0) {
                let drift = ((s_norm(s, v) - n0) / n0).abs();
                max_drift = max_drift.max(drift);
                if !(drift <= opts.norm_limit) {
                    return Err(Error::NormDrift {
                        drift,
                        limit: opts.norm_limit,
                        time: grid.time(k + 1),
                    });
                }
            }
        }
    }
    let m = occupied.len();
    let svecs: Vec<Vec<C>> = vecs.par_iter().map(|v| s.mul_complex(v)).collect();
    let overlap = DMatrix::from_fn(m, m, |row, col| {
        let vk = spec.vectors.column(occupied[row]);
        vk.iter()
            .zip(&svecs[col])
            .fold(C::new(0.0, 0.0), |acc, (&a, b)| acc + b * a)
    });
    let lu = overlap.clone().lu();
    let log_abs_det: f64 = lu.u().diagonal().iter().map(|d| d.norm().ln()).sum();
    let mut orthogonality_defect = 0.0f64;
    for a in 0..m {
        for b in 0..m {
            let ip: C = vecs[a].iter().zip(&svecs[b]).map(|(x, y)| x.conj() * y).sum();
            let id = if a == b { 1.0 } else { 0.0 };
            orthogonality_defect = orthogonality_defect.max((ip - id).norm());
        }
    }
    Ok(CorrectedP1s {
        p_1s: overlap[(0, 0)].norm_sqr(),
        p_bar_1s: (2.0 * log_abs_det).exp(),
        log_abs_det,
        orthogonality_defect,
        max_norm_drift: max_drift,
    })
}
