use num_complex::Complex64;
use rayon::prelude::*;

use super::{dot, norm2};
use crate::{Error, Result};

type C = Complex64;

/// A square complex operator `y = A x`.
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[C], y: &mut [C]);
}

/// Approximate inverse `z = M^-1 r`.
pub trait Preconditioner: Sync {
    fn apply(&self, r: &[C], z: &mut [C]);
}

pub struct IdentityPreconditioner;

impl Preconditioner for IdentityPreconditioner {
    fn apply(&self, r: &[C], z: &mut [C]) {
        z.copy_from_slice(r);
    }
}

#[derive(Clone, Copy, Debug)]
pub struct BicgstabOptions {
    /// Target for `|A x - b| / |b|`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for BicgstabOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 500,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct SolveReport {
    pub iterations: usize,
    /// Final relative residual `|A x - b| / |b|`.
    pub residual: f64,
    pub restarts: usize,
    /// Relative residual after every iteration.
    pub history: Vec<f64>,
}

/// Right-preconditioned BiCGSTAB for complex systems.
///
/// On breakdown (`r_hat^H r` or `r_hat^H v` vanishing) the iteration restarts
/// once from the current iterate with a perturbed shadow residual; a second
/// breakdown is reported as [`Error::Breakdown`].
pub fn bicgstab_solve(
    a: &dyn LinearOperator,
    rhs: &[C],
    x0: Option<&[C]>,
    opts: &BicgstabOptions,
    precond: Option<&dyn Preconditioner>,
) -> Result<(Vec<C>, SolveReport)> {
    let n = a.dim();
    if rhs.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: rhs.len(),
        });
    }
    if let Some(v) = rhs.iter().find(|v| !(v.re.is_finite() && v.im.is_finite())) {
        return Err(Error::NonFinite {
            x: f64::NAN,
            value: if v.re.is_finite() { v.im } else { v.re },
        });
    }
    let identity = IdentityPreconditioner;
    let m = precond.unwrap_or(&identity);
    let zero = C::new(0.0, 0.0);
    let mut x = x0.map_or_else(|| vec![zero; n], |v| v.to_vec());
    let mut report = SolveReport::default();
    let bnorm = norm2(rhs);
    if bnorm == 0.0 {
        x.fill(zero);
        return Ok((x, report));
    }

    let mut r = vec![zero; n];
    let mut tmp = vec![zero; n];
    residual(a, rhs, &x, &mut r, &mut tmp);
    let mut rel = norm2(&r) / bnorm;
    report.residual = rel;
    if rel <= opts.tol {
        return Ok((x, report));
    }

    let mut r_hat = r.clone();
    let mut p = vec![zero; n];
    let mut v = vec![zero; n];
    let mut y = vec![zero; n];
    let mut s = vec![zero; n];
    let mut z = vec![zero; n];
    let mut t = vec![zero; n];
    let (mut rho, mut alpha, mut omega) = (C::new(1.0, 0.0), C::new(1.0, 0.0), C::new(1.0, 0.0));
    let tiny = f64::EPSILON * f64::EPSILON;

    while report.iterations < opts.max_iter {
        let rho_new = dot(&r_hat, &r);
        if rho_new.norm() <= tiny * norm2(&r_hat) * norm2(&r) {
            restart(&mut report, &mut r_hat, &r, &mut p, &mut v)?;
            rho = C::new(1.0, 0.0);
            alpha = rho;
            omega = rho;
            continue;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        p.par_iter_mut()
            .zip(r.par_iter().zip(v.par_iter()))
            .for_each(|(p, (r, v))| *p = r + beta * (*p - omega * v));
        m.apply(&p, &mut y);
        a.apply(&y, &mut v);
        let rv = dot(&r_hat, &v);
        if rv.norm() <= tiny * norm2(&r_hat) * norm2(&v) {
            restart(&mut report, &mut r_hat, &r, &mut p, &mut v)?;
            rho = C::new(1.0, 0.0);
            alpha = rho;
            omega = rho;
            continue;
        }
        alpha = rho / rv;
        s.par_iter_mut()
            .zip(r.par_iter().zip(v.par_iter()))
            .for_each(|(s, (r, v))| *s = r - alpha * v);
        report.iterations += 1;
        if norm2(&s) / bnorm <= opts.tol {
            x.par_iter_mut().zip(y.par_iter()).for_each(|(x, y)| *x += alpha * y);
            r.copy_from_slice(&s);
        } else {
            m.apply(&s, &mut z);
            a.apply(&z, &mut t);
            let tt = dot(&t, &t).re;
            omega = if tt > 0.0 { dot(&t, &s) / tt } else { C::new(0.0, 0.0) };
            x.par_iter_mut()
                .zip(y.par_iter().zip(z.par_iter()))
                .for_each(|(x, (y, z))| *x += alpha * y + omega * z);
            if omega.norm() == 0.0 {
                residual(a, rhs, &x, &mut r, &mut tmp);
                restart(&mut report, &mut r_hat, &r, &mut p, &mut v)?;
                rho = C::new(1.0, 0.0);
                alpha = rho;
                omega = rho;
                continue;
            }
            r.par_iter_mut()
                .zip(s.par_iter().zip(t.par_iter()))
                .for_each(|(r, (s, t))| *r = s - omega * t);
        }
        rel = norm2(&r) / bnorm;
        if rel <= opts.tol {
            // the recursive residual drifts from the true one; confirm before stopping
            residual(a, rhs, &x, &mut r, &mut tmp);
            rel = norm2(&r) / bnorm;
        }
        report.history.push(rel);
        report.residual = rel;
        if rel <= opts.tol {
            return Ok((x, report));
        }
    }
    Err(Error::NotConverged {
        iterations: report.iterations,
        residual: report.residual,
    })
}

fn residual(a: &dyn LinearOperator, b: &[C], x: &[C], r: &mut [C], ax: &mut [C]) {
    a.apply(x, ax);
    r.par_iter_mut()
        .zip(b.par_iter().zip(ax.par_iter()))
        .for_each(|(r, (b, ax))| *r = b - ax);
}

fn restart(report: &mut SolveReport, r_hat: &mut [C], r: &[C], p: &mut [C], v: &mut [C]) -> Result<()> {
    if report.restarts > 0 {
        return Err(Error::Breakdown(format!(
            "after {} iterations and one restart",
            report.iterations
        )));
    }
    report.restarts += 1;
    let scale = norm2(r) / (r.len() as f64).sqrt();
    for (k, (h, r)) in r_hat.iter_mut().zip(r).enumerate() {
        // deterministic perturbation, not parallel to r
        let phase = (k as f64 * 0.618_033_988_749_895).fract() - 0.5;
        *h = r + C::new(phase, -phase) * scale;
    }
    p.fill(C::new(0.0, 0.0));
    v.fill(C::new(0.0, 0.0));
    Ok(())
}

impl LinearOperator for nalgebra::DMatrix<C> {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &[C], y: &mut [C]) {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = (0..self.ncols()).map(|j| self[(i, j)] * x[j]).sum();
        }
    }
}
