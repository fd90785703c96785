use hermite_dirac::linalg::*;
use hermite_dirac::Complex64 as C;
use nalgebra::DMatrix;

fn banded_test_matrix(n: usize, shift: f64) -> BandedMatrix<C> {
    let mut a = BandedMatrix::zeros(n, 3, 3);
    for i in 0..n {
        for j in i.saturating_sub(3)..(i + 4).min(n) {
            let x = ((i * 7 + j * 13) % 11) as f64 / 11.0 - 0.5;
            let y = ((i * 5 + j * 3) % 7) as f64 / 7.0 - 0.5;
            a.set(i, j, C::new(x, y));
        }
        a.add(i, i, C::new(shift, 0.0));
    }
    a
}

fn spd_band(n: usize) -> BandedRealMatrix {
    let mut s = BandedRealMatrix::zeros(n, 3, 3);
    for i in 0..n {
        s.set(i, i, 4.0);
        if i + 1 < n {
            s.set(i, i + 1, 1.0);
            s.set(i + 1, i, 1.0);
        }
        if i + 3 < n {
            s.set(i, i + 3, 0.25);
            s.set(i + 3, i, 0.25);
        }
    }
    s
}

fn hermitian_band(n: usize) -> BandedMatrix<C> {
    let mut h = BandedMatrix::zeros(n, 3, 3);
    for i in 0..n {
        h.set(i, i, C::new(i as f64 - 3.0, 0.0));
        for k in 1..=3 {
            if i + k < n {
                let v = C::new(0.3 / k as f64, 0.1 * (i % 3) as f64);
                h.set(i, i + k, v);
                h.set(i + k, i, v.conj());
            }
        }
    }
    h
}

#[test]
fn banded_lu_agrees_with_dense_solve() {
    let n = 30;
    let a = banded_test_matrix(n, 2.5);
    let b: Vec<C> = (0..n).map(|i| C::new(i as f64, 1.0 - i as f64 * 0.1)).collect();
    let x = a.lu().unwrap().solve(&b);
    let dense = a.to_dense().lu().solve(&nalgebra::DVector::from_vec(b)).unwrap();
    for (u, v) in x.iter().zip(dense.iter()) {
        assert!((u - v).norm() < 1e-12);
    }
}

#[test]
fn singular_band_is_reported() {
    let a = BandedMatrix::<C>::zeros(5, 1, 1);
    assert!(a.lu().is_err());
}

struct Dense(DMatrix<C>);

impl LinearOperator for Dense {
    fn dim(&self) -> usize {
        self.0.nrows()
    }
    fn apply(&self, x: &[C], y: &mut [C]) {
        let v = &self.0 * nalgebra::DVector::from_column_slice(x);
        y.copy_from_slice(v.as_slice());
    }
}

#[test]
fn bicgstab_reaches_the_direct_solution() {
    let n = 40;
    let a = banded_test_matrix(n, 4.0).to_dense();
    let b: Vec<C> = (0..n).map(|i| C::new((i as f64).sin(), (i as f64).cos())).collect();
    let opts = BicgstabOptions {
        tol: 1e-13,
        max_iter: 400,
    };
    let (x, report) = bicgstab_solve(&Dense(a.clone()), &b, None, &opts, None).unwrap();
    assert!(report.residual <= 1e-13);
    let direct = a.lu().solve(&nalgebra::DVector::from_vec(b)).unwrap();
    for (u, v) in x.iter().zip(direct.iter()) {
        assert!((u - v).norm() < 1e-11);
    }
}

#[test]
fn generalized_eigenvectors_are_s_orthonormal() {
    let n = 16;
    let s = spd_band(n).to_complex().to_dense();
    let h = hermitian_band(n).to_dense();
    let eig = solve_generalized_eig(&h, &s).unwrap();
    let v = &eig.vectors;
    let gram = v.adjoint() * &s * v;
    let hv = v.adjoint() * &h * v;
    for i in 0..n {
        for j in 0..n {
            let id = if i == j { 1.0 } else { 0.0 };
            assert!((gram[(i, j)] - C::new(id, 0.0)).norm() < 1e-12);
            let e = if i == j { eig.values[i] } else { 0.0 };
            assert!((hv[(i, j)] - C::new(e, 0.0)).norm() < 1e-11);
        }
    }
    assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn crank_nicolson_conserves_the_s_norm() {
    let n = 24;
    let s = spd_band(n);
    let h = hermitian_band(n);
    let mut c: Vec<C> = (0..n).map(|i| C::new(1.0 / (1.0 + i as f64), 0.2)).collect();
    let start = cn::s_norm(&s, &c);
    let prop = CnPropagator::new(&h, &s, 0.37).unwrap();
    for _ in 0..200 {
        c = prop.apply(&c);
    }
    assert!(((cn::s_norm(&s, &c) - start) / start).abs() < 1e-13);
}

#[test]
fn crank_nicolson_step_matches_the_dense_transfer_matrix() {
    let n = 12;
    let s = spd_band(n);
    let h = hermitian_band(n);
    let c: Vec<C> = (0..n).map(|i| C::new(i as f64 * 0.1, 1.0)).collect();
    let (next, report) = cn_step(&h, &s, &c, 0.05).unwrap();
    assert!(report.residual < 1e-14);
    let u = cn_transfer_matrix(&h.to_dense(), &s.to_complex().to_dense(), 0.05).unwrap();
    let want = u * nalgebra::DVector::from_vec(c);
    for (a, b) in next.iter().zip(want.iter()) {
        assert!((a - b).norm() < 1e-13);
    }
}

#[test]
fn crank_nicolson_refuses_bad_steps() {
    let s = spd_band(6);
    let h = hermitian_band(6);
    assert!(CnPropagator::new(&h, &s, 0.0).is_err());
    assert!(CnPropagator::new(&h, &s, f64::NAN).is_err());
}
