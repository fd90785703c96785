//! Acceptance report: one PASS/FAIL line per criterion.
//!
//! Set `HDIRAC_ACCEPTANCE=quick` to skip the long collision runs (criteria
//! 3, 4, 5, 6, 8 and 9 print SKIP). The process exits non-zero when a
//! criterion outside `KNOWN_FAILURES` fails.

use hermite_dirac::axial::{AxialSolver, CylGrid};
use hermite_dirac::cartesian::{
    assemble_overlap_3d, initial_state_3d, propagate_3d, relax_initial_state, CartGrid3D, CartesianSolver,
    SpinorField3D, SplineOrbital,
};
use hermite_dirac::fields::{CollisionSystem, NuclearModel};
use hermite_dirac::grid_basis::{
    assemble_first_derivative, assemble_overlap, assemble_weighted, eval_spline, GaussLegendre, Grid1D, SplineId,
};
use hermite_dirac::linalg::{bicgstab_solve, cn_transfer_matrix, BicgstabOptions};
use hermite_dirac::monopole::{default_grid, MonopoleRunOptions, MonopoleSolver};
use hermite_dirac::propagation::PropagationResult;
use hermite_dirac::tensor::{TensorEigenOptions, TensorRunOptions};
use hermite_dirac::units::{energy_in_rest_units, fm_to_bohr, point_nucleus_1s_energy};
use hermite_dirac::Complex64 as C;
use nalgebra::{DMatrix, DVector};
use std::time::Instant;

/// Criteria whose targets this implementation does not reach.
const KNOWN_FAILURES: [&str; 3] = ["AC5", "AC8", "AC9"];

struct Report {
    failed: Vec<&'static str>,
    passed: usize,
}

impl Report {
    fn line(&mut self, id: &'static str, pass: bool, detail: &str) {
        println!("{id} {} {detail}", if pass { "PASS" } else { "FAIL" });
        if pass {
            self.passed += 1;
        } else {
            self.failed.push(id);
        }
    }

    fn skip(&self, id: &str) {
        println!("{id} SKIP (quick mode)");
    }
}

struct Lcg(u64);

impl Lcg {
    fn next(&mut self) -> f64 {
        self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (self.0 >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    }

    fn c(&mut self) -> C {
        C::new(self.next(), self.next())
    }
}

fn uranium(model: NuclearModel) -> MonopoleSolver {
    MonopoleSolver::new(CollisionSystem::uranium(model), default_grid(92.0).unwrap()).unwrap()
}

fn point_solver(z: f64) -> MonopoleSolver {
    let mut system = CollisionSystem::uranium(NuclearModel::Point);
    system.z_a = z;
    MonopoleSolver::new(system, default_grid(z).unwrap()).unwrap()
}

const BOUND_1S_REF: [(f64, f64, f64, i32); 3] = [
    (92.0, -4861.1979, -4861.1979, 4),
    (100.0, -5939.1952, -5939.1952, 4),
    (130.0, -12838.926, -12838.920, 3),
];

fn ac1_ac2(r: &mut Report) {
    let mut ok1 = true;
    let mut ok2 = true;
    let mut d1 = String::new();
    let mut d2 = String::new();
    for (z, reference, exact_shown, digits) in BOUND_1S_REF {
        let start = Instant::now();
        let s = point_solver(z);
        let e = s.spectrum().ground_energy();
        let secs = start.elapsed().as_secs_f64();
        let basis = s.channel().len();
        ok1 &= (e - reference).abs() <= 0.01 && secs < 10.0 && basis <= 384;
        d1 += &format!(" Z={z}: {e:.5} vs {reference} ({basis} splines, {secs:.2} s);");
        let exact = point_nucleus_1s_energy(z);
        let half_ulp = 0.5 * 10f64.powi(-digits);
        ok2 &= (e - exact).abs() <= half_ulp && (exact - exact_shown).abs() <= half_ulp;
        d2 += &format!(" Z={z}: {e:.6} vs {exact:.6} (shown {exact_shown}, tol {half_ulp:e});");
    }
    r.line("AC1", ok1, &format!("[tol 0.01 a.u., < 10 s, <= 384 splines]{d1}"));
    r.line("AC2", ok2, &format!("[displayed digits]{d2}"));
}

const B_FM: [f64; 6] = [15.0, 20.0, 25.0, 30.0, 40.0, 50.0];
// E_min/mc^2 + 1 for point and sphere nuclei
const MIN_ENERGY_REF: [[f64; 2]; 6] = [
    [-1.353, -1.224],
    [-1.124, -1.046],
    [-0.967, -0.913],
    [-0.849, -0.810],
    [-0.680, -0.656],
    [-0.561, -0.545],
];
// b, P_1s point, P^(-) point, P_1s sphere, P^(-) sphere
const POPULATION_REF: [(f64, f64, f64, f64, f64); 5] = [
    (15.0, 0.549435, 4.70e-3, 0.610272, 3.43e-3),
    (20.0, 0.669281, 2.59e-3, 0.706189, 2.00e-3),
    (30.0, 0.811566, 0.87e-3, 0.826959, 0.72e-3),
    (40.0, 0.886131, 0.32e-3, 0.893379, 0.27e-3),
    (50.0, 0.928079, 0.12e-3, 0.931794, 0.11e-3),
];
// b, P_bar - P point, P_bar - P sphere
const DETERMINANT_SHIFT_REF: [(f64, f64, f64); 3] = [(15.0, 8.09e-4, 4.84e-4), (20.0, 3.25e-4, 2.14e-4), (30.0, 0.61e-4, 0.45e-4)];

/// Monopole runs over the reference impact parameters, `[b][model]`.
fn monopole_sweep() -> (Vec<[PropagationResult; 2]>, f64) {
    let start = Instant::now();
    let solvers = [uranium(NuclearModel::Point), uranium(NuclearModel::uranium_sphere())];
    let opts = MonopoleRunOptions::default();
    let runs = B_FM
        .iter()
        .map(|&b| [0, 1].map(|m| solvers[m].run(fm_to_bohr(b), &opts).unwrap()))
        .collect();
    (runs, start.elapsed().as_secs_f64())
}

fn ac3(r: &mut Report, runs: &[[PropagationResult; 2]], secs: f64) {
    let mut ok = secs < 1800.0;
    let mut d = String::new();
    for (i, &b) in B_FM.iter().enumerate() {
        for m in 0..2 {
            let e = energy_in_rest_units(runs[i][m].closest_approach_energy.unwrap());
            ok &= (e - MIN_ENERGY_REF[i][m]).abs() <= 0.01;
            d += &format!(" {b}{}: {e:.4} vs {};", ["p", "s"][m], MIN_ENERGY_REF[i][m]);
        }
    }
    r.line("AC3", ok, &format!("[tol 0.01, sweep {secs:.0} s < 1800 s]{d}"));
}

fn ac4(r: &mut Report, runs: &[[PropagationResult; 2]]) {
    let mut ok = true;
    let mut d = String::new();
    for (b, p1, m1, p2, m2) in POPULATION_REF {
        let i = B_FM.iter().position(|&x| x == b).unwrap();
        for (m, (p_ref, m_ref)) in [(p1, m1), (p2, m2)].into_iter().enumerate() {
            let pr = runs[i][m].probabilities;
            let (p, pm) = (pr.p_1s.unwrap(), pr.p_minus.unwrap());
            let rel = (pm - m_ref).abs() / m_ref;
            ok &= (p - p_ref).abs() <= 0.005 && rel <= 0.15;
            d += &format!(" {b}{}: P1s {p:.6} vs {p_ref}, P- {pm:.3e} vs {m_ref:.2e} ({:.0}%);", ["p", "s"][m], 100.0 * rel);
        }
    }
    let s = uranium(NuclearModel::Point);
    let p: Vec<f64> = [5000, 10_000, 20_000]
        .iter()
        .map(|&steps| {
            let opts = MonopoleRunOptions {
                steps,
                ..MonopoleRunOptions::default()
            };
            s.run(fm_to_bohr(15.0), &opts).unwrap().probabilities.p_1s.unwrap()
        })
        .collect();
    let order = ((p[0] - p[1]) / (p[1] - p[2])).log2();
    ok &= (order - 2.0).abs() <= 0.3;
    r.line(
        "AC4",
        ok,
        &format!("[P1s tol 0.005, P- tol 15%, dt-halving order 2.0 +- 0.3] order {order:.2} at b=15 point;{d}"),
    );
}

fn ac5(r: &mut Report) {
    let solvers = [uranium(NuclearModel::Point), uranium(NuclearModel::uranium_sphere())];
    let opts = MonopoleRunOptions::default();
    let mut ok = true;
    let mut d = String::new();
    for (b, dp, ds) in DETERMINANT_SHIFT_REF {
        for (m, reference) in [dp, ds].into_iter().enumerate() {
            let c = solvers[m].corrected_p1s(fm_to_bohr(b), &opts).unwrap();
            let diff = c.p_bar_1s - c.p_1s;
            let rel = (diff - reference).abs() / reference;
            ok &= rel <= 0.25;
            d += &format!(" {b}{}: {diff:.3e} vs {reference:.2e} ({:.0}%);", ["p", "s"][m], 100.0 * rel);
        }
    }
    // The printed b = 50 point row has P_bar = 0.909947 against P_1s =
    // 0.928079 but a difference of 0.03e-4.
    let c = solvers[0].corrected_p1s(fm_to_bohr(50.0), &opts).unwrap();
    let diff = c.p_bar_1s - c.p_1s;
    let consistent = diff.abs() < 1e-3;
    ok &= consistent;
    d += &format!(
        " b=50 point: P_bar {:.6}, P_1s {:.6}, diff {diff:.2e} (printed row P_bar - P_1s = {:.4});",
        c.p_bar_1s,
        c.p_1s,
        0.909947 - 0.928079
    );
    r.line("AC5", ok, &format!("[P_bar - P_1s tol 25%]{d}"));
}

/// 3D desk runs: relaxed initial state, then the three comparison points
/// and the bare-target null run.
struct ThreeD {
    points: Vec<(f64, PropagationResult, f64)>,
    null: PropagationResult,
}

const AC9_B: [f64; 3] = [200.0, 500.0, 1000.0];

fn three_d_runs() -> ThreeD {
    let opts = TensorRunOptions {
        bicgstab: BicgstabOptions {
            tol: 1e-10,
            max_iter: 500,
        },
        ..TensorRunOptions::default()
    };
    let relaxed = |system: CollisionSystem| -> (CartesianSolver, SpinorField3D) {
        let solver = CartesianSolver::new(CartGrid3D::coarse(), system).unwrap();
        let radial = uranium(NuclearModel::Point);
        let orbital = SplineOrbital::new(radial.channel(), &radial.ground_state()).unwrap();
        let f = initial_state_3d(solver.grid(), &orbital).unwrap();
        let (f, _) = relax_initial_state(&solver, &f, point_nucleus_1s_energy(92.0), &TensorEigenOptions::default()).unwrap();
        (solver, f)
    };
    let run = |solver: &CartesianSolver, f: &SpinorField3D, b: f64| {
        let traj = solver.trajectory(fm_to_bohr(b)).unwrap();
        let tg = solver.time_grid(&traj, 1024);
        propagate_3d(solver, &traj, &tg, f, &opts, None, None).unwrap()
    };
    let (solver, f) = relaxed(CollisionSystem::uranium(NuclearModel::Point));
    let points = AC9_B
        .iter()
        .map(|&b| {
            let start = Instant::now();
            let res = run(&solver, &f, b);
            (b, res, start.elapsed().as_secs_f64())
        })
        .collect();
    let mut bare = CollisionSystem::uranium(NuclearModel::Point);
    bare.z_b = 0.0;
    let (solver, f) = relaxed(bare);
    let null = run(&solver, &f, 500.0);
    ThreeD { points, null }
}

fn two_d_runs() -> (Vec<PropagationResult>, f64) {
    let start = Instant::now();
    let solver = AxialSolver::new(CylGrid::desk(), CollisionSystem::uranium(NuclearModel::Point)).unwrap();
    let (f, _) = solver.initial_state().unwrap();
    let runs = AC9_B
        .iter()
        .map(|&b| solver.run(fm_to_bohr(b), 3000, &f, &TensorRunOptions::default()).unwrap())
        .collect();
    (runs, start.elapsed().as_secs_f64())
}

fn ac6(r: &mut Report, one_d: &[[PropagationResult; 2]], two_d: &[PropagationResult], three_d: &ThreeD) {
    let d1 = one_d.iter().flatten().map(|x| x.max_norm_drift).fold(0.0, f64::max);
    let d2 = two_d.iter().map(|x| x.max_norm_drift).fold(0.0, f64::max);
    let d3 = three_d
        .points
        .iter()
        .map(|x| x.1.max_norm_drift)
        .chain([three_d.null.max_norm_drift])
        .fold(0.0, f64::max);
    let ok = d1 < 1e-8 && d2 < 1e-8 && d3 < 1e-6;
    r.line(
        "AC6",
        ok,
        &format!("[1D/2D < 1e-8, 3D < 1e-6] 1D {d1:.1e} ({} runs), 2D {d2:.1e} ({} runs), 3D {d3:.1e} ({} runs)", 2 * one_d.len(), two_d.len(), three_d.points.len() + 1),
    );
}

fn ac7(r: &mut Report) {
    let start = Instant::now();
    let mut rng = Lcg(11);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let n = 20;
        let a = DMatrix::from_fn(n, n, |_, _| rng.c());
        let h = (&a + a.adjoint()) * C::new(0.5, 0.0);
        let g = DMatrix::from_fn(n, n, |_, _| rng.c());
        let s = g.adjoint() * &g * C::new(0.2, 0.0) + DMatrix::identity(n, n);
        let dt = 0.05 + rng.next().abs();
        let u = cn_transfer_matrix(&h, &s, dt).unwrap();
        worst = worst.max((u.adjoint() * &s * &u - &s).camax() / s.camax());
    }
    let secs = start.elapsed().as_secs_f64();
    r.line("AC7", worst < 1e-12 && secs < 1.0, &format!("[1e-12, < 1 s] max |U^H S U - S| / |S| = {worst:.1e} over 10 systems, {secs:.3} s"));
}

fn ac8(r: &mut Report) {
    let solver = |g: CylGrid| AxialSolver::new(g, CollisionSystem::uranium(NuclearModel::Point)).unwrap();
    let start = Instant::now();
    let production = solver(CylGrid::production()).initial_state().unwrap().1;
    let secs = start.elapsed().as_secs_f64();
    let ladder: Vec<f64> = [(8, 32), (12, 48), (16, 64), (26, 100)]
        .iter()
        .map(|&(nr, nz)| solver(CylGrid::uniform_fm(2500.0, nr, -2500.0, 7500.0, nz).unwrap()).initial_state().unwrap().1)
        .collect();
    let exact = point_nucleus_1s_energy(92.0);
    let monotone = ladder.windows(2).all(|w| w[1] < w[0]) && ladder.iter().all(|&e| e > exact);
    let ok = (production + 4849.0).abs() <= 3.0 && monotone;
    r.line(
        "AC8",
        ok,
        &format!("[production grid -4849 +- 3, desk refinement monotone above {exact:.4}] 200x52: {production:.2} ({secs:.0} s); ladder {ladder:.2?}"),
    );
}

fn ac9(r: &mut Report, two_d: &[PropagationResult], two_secs: f64, three_d: &ThreeD) {
    let mut ok = two_secs < 7200.0;
    let mut d = String::new();
    for (p2, (b, p3, secs)) in two_d.iter().zip(&three_d.points) {
        let (a, c) = (p2.probabilities.p_ct.unwrap(), p3.probabilities.p_ct.unwrap());
        ok &= (a - c).abs() <= 0.05 && *secs < 7200.0;
        d += &format!(" b={b}: 2D {a:.4}, 3D {c:.4} ({secs:.0} s);");
    }
    let null = three_d.null.probabilities.p_ct.unwrap();
    ok &= null < 1e-3;
    r.line(
        "AC9",
        ok,
        &format!("[|2D - 3D| <= 0.05, null P_ct < 1e-3] 2D sweep {two_secs:.0} s;{d} Z_B=0: P_ct {null:.1e}, P_1s {:.6}", three_d.null.probabilities.p_1s.unwrap()),
    );
}

/// Adaptive Simpson with a tolerance of `rel` times the integrand scale.
fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, rel: f64, depth: u32) -> f64 {
    let scale = (0..=8).map(|i| f(a + (b - a) * i as f64 / 8.0).abs()).fold(0.0, f64::max);
    if scale == 0.0 {
        return 0.0;
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    simpson_refine(f, a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), rel * scale * (b - a), depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_refine(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
        return left + right + (left + right - whole) / 15.0;
    }
    simpson_refine(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + simpson_refine(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

fn ac10(r: &mut Report) {
    let start = Instant::now();

    // Kronecker overlap against dense quadrature on a toy lattice
    let grid = CartGrid3D::new(
        Grid1D::from_nodes(vec![-1.0, -0.3, 0.4, 1.1]).unwrap(),
        Grid1D::from_nodes(vec![-0.8, -0.1, 0.7, 1.0]).unwrap(),
        Grid1D::from_nodes(vec![-0.6, 0.2, 0.9, 1.7]).unwrap(),
    )
    .unwrap();
    let axes = grid.axes();
    let dims: Vec<usize> = axes.iter().map(|g| g.basis_len()).collect();
    let n_sp = dims.iter().product::<usize>();
    let rule = GaussLegendre::new(4);
    let mut dense = DMatrix::<f64>::zeros(n_sp, n_sp);
    let pts = |g: &Grid1D| -> Vec<(f64, f64)> {
        (0..g.intervals())
            .flat_map(|e| rule.on_interval(g.nodes()[e], g.nodes()[e + 1]).collect::<Vec<_>>())
            .collect()
    };
    let (px, py, pz) = (pts(axes[0]), pts(axes[1]), pts(axes[2]));
    let mut values = vec![0.0; n_sp];
    for &(x, wx) in &px {
        for &(y, wy) in &py {
            for &(z, wz) in &pz {
                for ix in 0..dims[0] {
                    let vx = eval_spline(axes[0], SplineId::from_index(ix), x, 0);
                    for iy in 0..dims[1] {
                        let vy = eval_spline(axes[1], SplineId::from_index(iy), y, 0);
                        for iz in 0..dims[2] {
                            values[(ix * dims[1] + iy) * dims[2] + iz] =
                                vx * vy * eval_spline(axes[2], SplineId::from_index(iz), z, 0);
                        }
                    }
                }
                let w = wx * wy * wz;
                for i in 0..n_sp {
                    if values[i] != 0.0 {
                        for j in 0..n_sp {
                            dense[(i, j)] += w * values[i] * values[j];
                        }
                    }
                }
            }
        }
    }
    let kron = assemble_overlap_3d(&grid).unwrap();
    let mut kron_err = 0.0f64;
    for j in 0..grid.len() {
        let mut e = vec![C::new(0.0, 0.0); grid.len()];
        e[j] = C::new(1.0, 0.0);
        let col = kron.apply(&e).unwrap();
        for (i, v) in col.iter().enumerate() {
            let expected = if i % 4 == j % 4 { dense[(i / 4, j / 4)] } else { 0.0 };
            kron_err = kron_err.max((v - expected).norm());
        }
    }

    // BiCGSTAB against a dense LU solve
    let mut rng = Lcg(3);
    let n = 60;
    let mut a = DMatrix::from_fn(n, n, |_, _| rng.c());
    for i in 0..n {
        a[(i, i)] += C::new(25.0, 4.0);
    }
    let rhs: Vec<C> = (0..n).map(|_| rng.c()).collect();
    let opts = BicgstabOptions {
        tol: 1e-14,
        max_iter: 500,
    };
    let (x, _) = bicgstab_solve(&a, &rhs, None, &opts, None).unwrap();
    let lu = a.clone().lu().solve(&DVector::from_vec(rhs)).unwrap();
    let bicg_err = x.iter().zip(lu.iter()).map(|(u, v)| (u - v).norm()).fold(0.0, f64::max);

    // spline matrix elements against adaptive quadrature
    let g = default_grid(92.0).unwrap();
    let s = assemble_overlap(&g);
    let dmat = assemble_first_derivative(&g);
    let inv_r = assemble_weighted(&g, 8, |r| 1.0 / r).unwrap();
    let mut elem_err = 0.0f64;
    let integral = |f: &dyn Fn(f64) -> f64| -> f64 {
        (0..g.intervals())
            .map(|e| adaptive_simpson(f, g.nodes()[e], g.nodes()[e + 1], 1e-15, 40))
            .sum()
    };
    for k in 0..g.basis_len() {
        let sk = SplineId::from_index(k);
        let band: Vec<usize> = (k.saturating_sub(3)..(k + 4).min(g.basis_len())).collect();
        // errors are measured against the largest oracle entry of the row
        let mut rows = [vec![], vec![], vec![]];
        for &j in &band {
            let sj = SplineId::from_index(j);
            rows[0].push(integral(&|x| eval_spline(&g, sk, x, 0) * eval_spline(&g, sj, x, 0)));
            rows[1].push(integral(&|x| eval_spline(&g, sk, x, 0) * eval_spline(&g, sj, x, 1)));
            rows[2].push(integral(&|x| eval_spline(&g, sk, x, 0) * eval_spline(&g, sj, x, 0) / x));
        }
        for (m, row) in [&s, &dmat, &inv_r].into_iter().zip(&rows) {
            let scale = row.iter().fold(0.0f64, |a, o| a.max(o.abs()));
            for (&j, o) in band.iter().zip(row) {
                elem_err = elem_err.max((m.get(k, j) - o).abs() / scale);
            }
        }
    }

    // Crank-Nicolson against the matrix exponential
    let m = 6;
    let a = DMatrix::from_fn(m, m, |_, _| rng.c());
    let h = (&a + a.adjoint()) * C::new(0.5, 0.0);
    let id = DMatrix::<C>::identity(m, m);
    let c0 = DVector::from_fn(m, |k, _| C::new(1.0 / (k + 1) as f64, 0.3));
    let local = |dt: f64| {
        let exact = (&h * C::new(0.0, -dt)).exp() * &c0;
        let cn = cn_transfer_matrix(&h, &id, dt).unwrap() * &c0;
        (exact - cn).norm()
    };
    let order = (local(0.02) / local(0.01)).log2();

    let secs = start.elapsed().as_secs_f64();
    let ok = kron_err < 1e-12 && bicg_err < 1e-10 && elem_err < 1e-10 && (order - 3.0).abs() < 0.1 && secs < 60.0;
    r.line(
        "AC10",
        ok,
        &format!(
            "[1e-12, 1e-10, 1e-10, order 3, < 60 s] kronecker {kron_err:.1e}, bicgstab {bicg_err:.1e}, elements {elem_err:.1e} (row-relative), CN order {order:.3}, {secs:.1} s"
        ),
    );
}

fn main() {
    let quick = std::env::var("HDIRAC_ACCEPTANCE").is_ok_and(|v| v == "quick");
    let start = Instant::now();
    let mut r = Report {
        failed: Vec::new(),
        passed: 0,
    };
    ac1_ac2(&mut r);
    if quick {
        for id in ["AC3", "AC4", "AC5", "AC6"] {
            r.skip(id);
        }
    } else {
        let (one_d, secs) = monopole_sweep();
        ac3(&mut r, &one_d, secs);
        ac4(&mut r, &one_d);
        ac5(&mut r);
        let (two_d, two_secs) = two_d_runs();
        let three_d = three_d_runs();
        ac6(&mut r, &one_d, &two_d, &three_d);
        ac7(&mut r);
        ac8(&mut r);
        ac9(&mut r, &two_d, two_secs, &three_d);
    }
    if quick {
        ac7(&mut r);
        r.skip("AC8");
        r.skip("AC9");
    }
    ac10(&mut r);
    let unexpected: Vec<_> = r.failed.iter().filter(|id| !KNOWN_FAILURES.contains(id)).collect();
    println!(
        "acceptance: {} passed, {} failed {:?} ({} unexpected), {:.0} s",
        r.passed,
        r.failed.len(),
        r.failed,
        unexpected.len(),
        start.elapsed().as_secs_f64()
    );
    if !unexpected.is_empty() {
        std::process::exit(1);
    }
}
