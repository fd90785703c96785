use super::grid::Grid1D;
use crate::linalg::banded::Scalar;
use crate::{Error, Result};

/// Which of the two splines attached to a node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SplineKind {
    /// Unit value, zero slope at the node.
    Value = 0,
    /// Zero value, unit slope at the node.
    Slope = 1,
}

/// Basis function `s^kind_node`; `node` runs over the interior nodes `1..N-1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SplineId {
    pub node: usize,
    pub kind: SplineKind,
}

impl SplineId {
    pub fn new(node: usize, kind: SplineKind) -> Self {
        Self { node, kind }
    }

    pub fn index(&self) -> usize {
        2 * (self.node - 1) + self.kind as usize
    }

    pub fn from_index(index: usize) -> Self {
        let kind = if index % 2 == 0 {
            SplineKind::Value
        } else {
            SplineKind::Slope
        };
        Self {
            node: index / 2 + 1,
            kind,
        }
    }
}

/// The four cubic shape functions of an element of width `h` at local
/// coordinate `t` in `[0, 1]`, differentiated `deriv` times with respect to `x`.
///
/// Order: left value, left slope, right value, right slope.
#[inline]
pub fn local_shape(t: f64, h: f64, deriv: u8) -> [f64; 4] {
    match deriv {
        0 => [
            (1.0 - t) * (1.0 - t) * (1.0 + 2.0 * t),
            h * t * (1.0 - t) * (1.0 - t),
            t * t * (3.0 - 2.0 * t),
            h * t * t * (t - 1.0),
        ],
        1 => [
            6.0 * t * (t - 1.0) / h,
            1.0 - 4.0 * t + 3.0 * t * t,
            6.0 * t * (1.0 - t) / h,
            t * (3.0 * t - 2.0),
        ],
        2 => [
            (12.0 * t - 6.0) / (h * h),
            (6.0 * t - 4.0) / h,
            (6.0 - 12.0 * t) / (h * h),
            (6.0 * t - 2.0) / h,
        ],
        3 => [12.0 / (h * h * h), 6.0 / (h * h), -12.0 / (h * h * h), 6.0 / (h * h)],
        _ => [0.0; 4],
    }
}

/// Value (or `deriv`-th derivative) of one basis spline at `x`.
///
/// Returns zero outside the support `(x_{a-1}, x_{a+1})` and outside the grid.
/// At the centre node the right element is used, which only matters for the
/// second derivative.
pub fn eval_spline(grid: &Grid1D, id: SplineId, x: f64, deriv: u8) -> f64 {
    let a = id.node;
    assert!(a >= 1 && a < grid.intervals(), "spline node {a} is not interior");
    let nodes = grid.nodes();
    if x <= nodes[a - 1] || x >= nodes[a + 1] {
        return 0.0;
    }
    let kind = id.kind as usize;
    if x >= nodes[a] {
        let h = grid.width(a);
        local_shape((x - nodes[a]) / h, h, deriv)[kind]
    } else {
        let h = grid.width(a - 1);
        local_shape((x - nodes[a - 1]) / h, h, deriv)[2 + kind]
    }
}

/// Evaluates the expansion `sum_k coeffs[k] s_k(x)` (or a derivative).
pub fn evaluate<T: Scalar>(grid: &Grid1D, coeffs: &[T], x: f64, deriv: u8) -> T {
    assert_eq!(coeffs.len(), grid.basis_len());
    let Some(e) = grid.element_of(x) else {
        return T::zero();
    };
    let h = grid.width(e);
    let shape = local_shape((x - grid.nodes()[e]) / h, h, deriv);
    let mut sum = T::zero();
    for (a, &s) in shape.iter().enumerate() {
        if let Some(k) = grid.local_to_global(e, a) {
            sum += coeffs[k] * T::from_real(s);
        }
    }
    sum
}

/// Hermite interpolation coefficients from nodal values and slopes at the
/// interior nodes `1..N-1`.
pub fn interpolate(grid: &Grid1D, values: &[f64], slopes: &[f64]) -> Result<Vec<f64>> {
    let m = grid.interior_nodes();
    for len in [values.len(), slopes.len()] {
        if len != m {
            return Err(Error::LengthMismatch {
                expected: m,
                actual: len,
            });
        }
    }
    Ok(values
        .iter()
        .zip(slopes)
        .flat_map(|(&v, &d)| [v, d])
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn lumpy_grid() -> Grid1D {
        Grid1D::from_nodes(vec![0.0, 0.3, 0.45, 1.0, 1.2, 2.0, 2.9, 3.0]).unwrap()
    }

    #[test]
    fn nodal_conditions() {
        let g = lumpy_grid();
        for a in 1..g.intervals() {
            for b in 0..=g.intervals() {
                let xb = g.nodes()[b];
                let delta = if a == b { 1.0 } else { 0.0 };
                let s0 = SplineId::new(a, SplineKind::Value);
                let s1 = SplineId::new(a, SplineKind::Slope);
                assert!((eval_spline(&g, s0, xb, 0) - delta).abs() < 1e-14);
                assert!(eval_spline(&g, s0, xb, 1).abs() < 1e-13);
                assert!(eval_spline(&g, s1, xb, 0).abs() < 1e-14);
                assert!((eval_spline(&g, s1, xb, 1) - delta).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn half_node_values_on_unit_grid() {
        let g = Grid1D::uniform(0.0, 4.0, 4).unwrap();
        let s0 = SplineId::new(2, SplineKind::Value);
        let s1 = SplineId::new(2, SplineKind::Slope);
        assert!((eval_spline(&g, s0, 2.5, 0) - 0.5).abs() < 1e-15);
        assert!((eval_spline(&g, s0, 1.5, 0) - 0.5).abs() < 1e-15);
        // the slope spline is odd about its node
        assert!((eval_spline(&g, s1, 2.5, 0) - 0.125).abs() < 1e-15);
        assert!((eval_spline(&g, s1, 1.5, 0) + 0.125).abs() < 1e-15);
    }

    #[test]
    fn zero_outside_support() {
        let g = lumpy_grid();
        let s = SplineId::new(3, SplineKind::Value);
        assert_eq!(eval_spline(&g, s, 0.44, 0), 0.0);
        assert_eq!(eval_spline(&g, s, 1.2, 0), 0.0);
        assert_eq!(eval_spline(&g, s, 5.0, 0), 0.0);
    }

    #[test]
    fn c1_continuity_at_nodes() {
        let g = lumpy_grid();
        let eps = 1e-9;
        for k in 0..g.basis_len() {
            let id = SplineId::from_index(k);
            for &x in &g.nodes()[1..g.intervals()] {
                for d in 0..2 {
                    let l = eval_spline(&g, id, x - eps, d);
                    let r = eval_spline(&g, id, x + eps, d);
                    assert!((l - r).abs() < 1e-6, "k={k} x={x} d={d}");
                }
            }
        }
    }

    #[test]
    fn index_round_trip() {
        for k in 0..20 {
            assert_eq!(SplineId::from_index(k).index(), k);
        }
    }

    #[test]
    fn interpolation_length_mismatch() {
        let g = lumpy_grid();
        assert!(matches!(
            interpolate(&g, &[0.0; 3], &[0.0; 6]),
            Err(Error::LengthMismatch { .. })
        ));
        let c = interpolate(&g, &[0.0; 6], &[0.0; 6]).unwrap();
        assert!(c.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn cubic_reproduced_exactly() {
        let g = lumpy_grid();
        let interior = &g.nodes()[1..g.intervals()];
        let q = |x: f64| 1.0 - 2.0 * x + 0.5 * x * x * x;
        let dq = |x: f64| -2.0 + 1.5 * x * x;
        let vals: Vec<f64> = interior.iter().map(|&x| q(x)).collect();
        let slopes: Vec<f64> = interior.iter().map(|&x| dq(x)).collect();
        let c = interpolate(&g, &vals, &slopes).unwrap();
        // boundary elements miss the end-node splines, so check the inner ones
        for e in 1..g.intervals() - 1 {
            let (a, b) = (g.nodes()[e], g.nodes()[e + 1]);
            for k in 0..=10 {
                let x = a + (b - a) * k as f64 / 10.0;
                assert!((evaluate(&g, &c, x, 0) - q(x)).abs() < 1e-13);
                assert!((evaluate(&g, &c, x, 1) - dq(x)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn sine_interpolation_is_fourth_order() {
        let mut errors = Vec::new();
        for n in [8usize, 16, 32, 64] {
            let g = Grid1D::uniform(0.0, std::f64::consts::PI, n).unwrap();
            // sin^2 vanishes with its slope at both ends
            let f = |x: f64| x.sin().powi(2);
            let df = |x: f64| 2.0 * x.sin() * x.cos();
            let interior = &g.nodes()[1..n];
            let c = interpolate(
                &g,
                &interior.iter().map(|&x| f(x)).collect::<Vec<_>>(),
                &interior.iter().map(|&x| df(x)).collect::<Vec<_>>(),
            )
            .unwrap();
            let err = (0..=997)
                .map(|k| {
                    let x = std::f64::consts::PI * k as f64 / 997.0;
                    (evaluate(&g, &c, x, 0) - f(x)).abs()
                })
                .fold(0.0, f64::max);
            errors.push(err);
        }
        for w in errors.windows(2) {
            let ratio = w[0] / w[1];
            assert!(ratio > 12.0 && ratio < 20.0, "ratio {ratio}, errors {errors:?}");
        }
    }

    proptest! {
        #[test]
        fn partition_of_unity(x in 0.3f64..2.9) {
            let g = lumpy_grid();
            let sum: f64 = (1..g.intervals())
                .map(|a| eval_spline(&g, SplineId::new(a, SplineKind::Value), x, 0))
                .sum();
            prop_assert!((sum - 1.0).abs() < 1e-13);
        }
    }
}
