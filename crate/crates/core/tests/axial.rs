use hermite_dirac::axial::*;
use hermite_dirac::checkpoint::{Checkpoint, CheckpointPolicy};
use hermite_dirac::fields::{CollisionSystem, NuclearModel};
use hermite_dirac::grid_basis::{assemble_overlap, eval_spline, GaussLegendre, Grid1D, SplineId};
use hermite_dirac::monopole::{default_grid, MonopoleSolver};
use hermite_dirac::tensor::TensorRunOptions;
use hermite_dirac::units::{fm_to_bohr, SPEED_OF_LIGHT};
use hermite_dirac::Error;
use std::f64::consts::PI;

fn toy() -> CylGrid {
    CylGrid::new(
        Grid1D::from_nodes(vec![0.0, 0.3, 0.8, 1.5]).unwrap(),
        Grid1D::from_nodes(vec![-1.0, -0.1, 0.6, 1.4]).unwrap(),
        0.5,
    )
    .unwrap()
}

/// `sum_w f` over a tensor Gauss rule on every element pair.
fn quad2(grid: &CylGrid, f: impl Fn(f64, f64) -> f64) -> f64 {
    let rule = GaussLegendre::new(24);
    let mut total = 0.0;
    for ez in 0..grid.z.intervals() {
        for er in 0..grid.rho.intervals() {
            let (z0, z1) = (grid.z.nodes()[ez], grid.z.nodes()[ez + 1]);
            let (r0, r1) = (grid.rho.nodes()[er], grid.rho.nodes()[er + 1]);
            for (z, wz) in rule.on_interval(z0, z1) {
                for (r, wr) in rule.on_interval(r0, r1) {
                    total += wz * wr * f(r, z);
                }
            }
        }
    }
    total
}

#[test]
fn k_block_matches_direct_quadrature() {
    let grid = toy();
    let h = assemble_hc(&grid, |_, _| Ok(0.0)).unwrap();
    let (nz, nr) = (grid.z.basis_len(), grid.rho.basis_len());
    let m = grid.m;
    let mut worst = 0.0f64;
    let mut largest = 0.0f64;
    for iz in 0..nz {
        for jz in 0..nz {
            for ir in 0..nr {
                for jr in 0..nr {
                    let (si, sj) = (SplineId::from_index(iz), SplineId::from_index(jz));
                    let (ti, tj) = (SplineId::from_index(ir), SplineId::from_index(jr));
                    let direct = SPEED_OF_LIGHT
                        * quad2(&grid, |r, z| {
                            let sz = eval_spline(&grid.z, si, z, 0) * eval_spline(&grid.z, sj, z, 0);
                            let tj_val = eval_spline(&grid.rho, tj, r, 0);
                            let tj_der = eval_spline(&grid.rho, tj, r, 1);
                            sz * eval_spline(&grid.rho, ti, r, 0) * (tj_der + m * tj_val / r)
                        });
                    let row = (iz * nr + ir) * 4;
                    let col = (jz * nr + jr) * 4;
                    let k = h.get(row, col + 3);
                    let kt = h.get(col + 3, row);
                    worst = worst.max((k.re - direct).abs()).max((kt.re - direct).abs());
                    largest = largest.max(direct.abs());
                }
            }
        }
    }
    assert!(worst < 1e-10 * largest, "worst {worst:e} of {largest:e}");
}

#[test]
fn overlap_matches_two_dimensional_quadrature() {
    let grid = toy();
    let shape = grid.shape();
    let s = explicit_overlap(&shape, &[assemble_overlap(&grid.z), assemble_overlap(&grid.rho)]);
    let (nz, nr) = (grid.z.basis_len(), grid.rho.basis_len());
    let mut worst = 0.0f64;
    for a in 0..nz * nr {
        for b in 0..nz * nr {
            let (ia, ra) = (SplineId::from_index(a / nr), SplineId::from_index(a % nr));
            let (ib, rb) = (SplineId::from_index(b / nr), SplineId::from_index(b % nr));
            let direct = quad2(&grid, |r, z| {
                eval_spline(&grid.z, ia, z, 0)
                    * eval_spline(&grid.z, ib, z, 0)
                    * eval_spline(&grid.rho, ra, r, 0)
                    * eval_spline(&grid.rho, rb, r, 0)
            });
            for k in 0..4 {
                worst = worst.max((s.get(4 * a + k, 4 * b + k) - direct).abs());
            }
        }
    }
    assert!(worst < 1e-13, "{worst:e}");
}

#[test]
fn coulomb_operator_is_hermitian() {
    let grid = toy();
    let h = assemble_hc(&grid, |rho, z| Ok(-92.0 / (rho * rho + z * z).sqrt())).unwrap();
    assert!(h.hermiticity_defect() < 1e-12);
}

fn solver(grid: CylGrid, z_b: f64) -> AxialSolver {
    let mut system = CollisionSystem::uranium(NuclearModel::Point);
    system.z_b = z_b;
    AxialSolver::new(grid, system).unwrap()
}

#[test]
fn initial_state_is_normalized() {
    let s = solver(CylGrid::uniform_fm(2500.0, 10, -2500.0, 7500.0, 40).unwrap(), 92.0);
    let (f, e) = s.initial_state().unwrap();
    assert!((s.overlap().norm_sqr(&f.coeffs).unwrap() - 1.0).abs() < 1e-10);
    assert!(e > -4861.2 && e < -2000.0, "{e}");
}

#[test]
fn refinement_lowers_the_energy_towards_the_radial_value() {
    let energies: Vec<f64> = [(8, 32), (12, 48), (16, 64)]
        .iter()
        .map(|&(nr, nz)| {
            let s = solver(CylGrid::uniform_fm(2500.0, nr, -2500.0, 7500.0, nz).unwrap(), 92.0);
            s.initial_state().unwrap().1
        })
        .collect();
    assert!(energies.windows(2).all(|w| w[1] < w[0]), "{energies:?}");
    assert!(energies[2] > -4861.1979, "{energies:?}");
}

#[test]
fn near_axis_density_approaches_the_radial_solution() {
    let radial = MonopoleSolver::new(CollisionSystem::uranium(NuclearModel::Point), default_grid(92.0).unwrap()).unwrap();
    let ground = radial.ground_state();
    let norm = ground.norm(radial.channel());
    let density_1d = |r: f64| {
        let (p, q) = ground.eval(radial.channel(), r, 0);
        (p.norm_sqr() + q.norm_sqr()) / norm / (4.0 * PI * r * r)
    };
    // rms relative error over 0 < rho < 1000 fm, |z| <= 800 fm
    let error = |nr: usize, nz: usize| {
        let s = solver(CylGrid::uniform_fm(2500.0, nr, -2500.0, 7500.0, nz).unwrap(), 92.0);
        let (f, _) = s.initial_state().unwrap();
        let mut sum = 0.0;
        let mut count = 0.0;
        for ir in 1..10 {
            for iz in -4..=4 {
                let (rho, z) = (fm_to_bohr(100.0 * ir as f64), fm_to_bohr(200.0 * iz as f64));
                let u = evaluate_2d(s.grid(), &f, rho, z);
                let d2 = u.iter().map(|c| c.norm_sqr()).sum::<f64>() / (2.0 * PI * rho);
                let d1 = density_1d((rho * rho + z * z).sqrt());
                sum += (d2 / d1 - 1.0).powi(2);
                count += 1.0;
            }
        }
        (sum / count).sqrt()
    };
    let (coarse, fine) = (error(12, 48), error(24, 96));
    assert!(fine < coarse, "{coarse} -> {fine}");
}

#[test]
fn bare_target_stays_put() {
    let s = solver(CylGrid::uniform_fm(5000.0, 12, -5000.0, 15000.0, 48).unwrap(), 0.0);
    let (f, _) = s.initial_state().unwrap();
    let r = s.run(fm_to_bohr(300.0), 200, &f, &TensorRunOptions::default()).unwrap();
    assert!((r.probabilities.p_1s.unwrap() - 1.0).abs() < 1e-6);
    assert!(r.probabilities.p_ct.unwrap() < 1e-4);
    assert!(r.max_norm_drift < 1e-7);
}

#[test]
fn halving_the_step_shrinks_the_transfer_error_fourfold() {
    let s = solver(CylGrid::uniform_fm(2500.0, 10, -2500.0, 7500.0, 40).unwrap(), 92.0);
    let (f, _) = s.initial_state().unwrap();
    let p: Vec<f64> = [800, 1600, 3200]
        .iter()
        .map(|&n| s.run(fm_to_bohr(300.0), n, &f, &TensorRunOptions::default()).unwrap().probabilities.p_ct.unwrap())
        .collect();
    let ratio = (p[0] - p[1]) / (p[1] - p[2]);
    assert!((ratio - 4.0).abs() < 1.0, "{p:?}, ratio {ratio}");
}

#[test]
fn resumed_run_reproduces_the_transfer() {
    let s = solver(CylGrid::uniform_fm(2500.0, 8, -2500.0, 7500.0, 32).unwrap(), 92.0);
    let (f, _) = s.initial_state().unwrap();
    let traj = s.trajectory(fm_to_bohr(250.0)).unwrap();
    let tg = s.time_grid(&traj, 60);
    let opts = TensorRunOptions::default();
    let straight = propagate_2d(&s, &traj, &tg, &f, &opts, None, None).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let policy = CheckpointPolicy {
        path: dir.path().join("axial.ck"),
        every: 10,
        halt_after: Some(37),
    };
    let halted = propagate_2d(&s, &traj, &tg, &f, &opts, None, Some(&policy));
    assert!(matches!(halted, Err(Error::Halted { step: 37 })));
    let ck = Checkpoint::restore(&policy.path, &s.grid().descriptor()).unwrap();
    let resumed = propagate_2d(&s, &traj, &tg, &f, &opts, Some(&ck), None).unwrap();
    let (a, b) = (straight.probabilities.p_ct.unwrap(), resumed.probabilities.p_ct.unwrap());
    assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    assert_eq!(straight.final_coefficients, resumed.final_coefficients);
    let wrong = CylGrid::uniform_fm(2500.0, 8, -2500.0, 7000.0, 32).unwrap();
    assert!(matches!(
        Checkpoint::restore(&policy.path, &wrong.descriptor()),
        Err(Error::Checkpoint(_))
    ));
}
