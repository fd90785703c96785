use rayon::prelude::*;

use super::grid::Grid1D;
use super::hermite::local_shape;
use super::quadrature::GaussLegendre;
use super::HALF_BANDWIDTH;
use crate::linalg::banded::BandedRealMatrix;
use crate::{Error, Result};

/// Gauss points per element (or per sub-interval of a split element).
pub const DEFAULT_QUADRATURE_ORDER: usize = 8;

/// Galerkin matrix `A_kj = int s_k^(dl) w s_j^(dr) dx` over `[lo, hi]`.
///
/// Elements containing a breakpoint are split there and each piece gets its
/// own Gauss rule, so weights with a kink or jump at a known coordinate are
/// still integrated to full order. Elements are processed in parallel and the
/// local blocks summed in element order, so the result is deterministic.
pub fn assemble_bilinear<W>(
    grid: &Grid1D,
    order: usize,
    breakpoints: &[f64],
    window: Option<(f64, f64)>,
    w: W,
    dl: u8,
    dr: u8,
) -> Result<BandedRealMatrix>
where
    W: Fn(f64) -> f64 + Sync,
{
    let rule = GaussLegendre::new(order);
    let (lo, hi) = window.unwrap_or((grid.start(), grid.end()));
    let blocks: Vec<Result<[[f64; 4]; 4]>> = (0..grid.intervals())
        .into_par_iter()
        .map(|e| {
            let (a, b) = (grid.nodes()[e], grid.nodes()[e + 1]);
            let h = b - a;
            let mut block = [[0.0; 4]; 4];
            for (sa, sb) in pieces(a, b, breakpoints, lo, hi) {
                for (x, wq) in rule.on_interval(sa, sb) {
                    let t = (x - a) / h;
                    let weight = w(x);
                    if !weight.is_finite() {
                        return Err(Error::NonFinite { x, value: weight });
                    }
                    let fl = local_shape(t, h, dl);
                    let fr = local_shape(t, h, dr);
                    for i in 0..4 {
                        let wi = wq * weight * fl[i];
                        for j in 0..4 {
                            block[i][j] += wi * fr[j];
                        }
                    }
                }
            }
            Ok(block)
        })
        .collect();

    let n = grid.basis_len();
    let mut m = BandedRealMatrix::zeros(n, HALF_BANDWIDTH, HALF_BANDWIDTH);
    for (e, block) in blocks.into_iter().enumerate() {
        let block = block?;
        for i in 0..4 {
            let Some(gi) = grid.local_to_global(e, i) else { continue };
            for j in 0..4 {
                if let Some(gj) = grid.local_to_global(e, j) {
                    m.add(gi, gj, block[i][j]);
                }
            }
        }
    }
    Ok(m)
}

/// Sub-intervals of `[a, b]` cut at the interior breakpoints and clipped to `[lo, hi]`.
fn pieces(a: f64, b: f64, breakpoints: &[f64], lo: f64, hi: f64) -> Vec<(f64, f64)> {
    let (a0, b0) = (a.max(lo), b.min(hi));
    if a0 >= b0 {
        return Vec::new();
    }
    let mut cuts: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|&p| p > a0 && p < b0)
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut out = Vec::with_capacity(cuts.len() + 1);
    let mut start = a0;
    for c in cuts {
        out.push((start, c));
        start = c;
    }
    out.push((start, b0));
    out
}

/// Overlap matrix `S_kj = int s_k s_j dx`.
pub fn assemble_overlap(grid: &Grid1D) -> BandedRealMatrix {
    assemble_weighted(grid, DEFAULT_QUADRATURE_ORDER, |_| 1.0).expect("unit weight is finite")
}

/// First-derivative matrix `D_kj = int s_k s_j' dx`, antisymmetric.
pub fn assemble_first_derivative(grid: &Grid1D) -> BandedRealMatrix {
    let mut d = assemble_bilinear(grid, DEFAULT_QUADRATURE_ORDER, &[], None, |_| 1.0, 0, 1)
        .expect("unit weight is finite");
    // exact antisymmetry, removing round-off
    let n = d.dim();
    for i in 0..n {
        d.set(i, i, 0.0);
        for j in i + 1..(i + HALF_BANDWIDTH + 1).min(n) {
            let v = 0.5 * (d.get(i, j) - d.get(j, i));
            d.set(i, j, v);
            d.set(j, i, -v);
        }
    }
    d
}

/// Potential matrix `W_kj = int s_k w s_j dx`.
pub fn assemble_weighted<W>(grid: &Grid1D, order: usize, w: W) -> Result<BandedRealMatrix>
where
    W: Fn(f64) -> f64 + Sync,
{
    assemble_weighted_split(grid, order, &[], w)
}

/// Like [`assemble_weighted`], splitting elements at `breakpoints`.
pub fn assemble_weighted_split<W>(
    grid: &Grid1D,
    order: usize,
    breakpoints: &[f64],
    w: W,
) -> Result<BandedRealMatrix>
where
    W: Fn(f64) -> f64 + Sync,
{
    let mut m = assemble_bilinear(grid, order, breakpoints, None, w, 0, 0)?;
    symmetrize(&mut m);
    Ok(m)
}

/// Overlap restricted to `[lo, hi]`.
pub fn assemble_partial_overlap(grid: &Grid1D, lo: f64, hi: f64) -> BandedRealMatrix {
    let mut m = assemble_bilinear(
        grid,
        DEFAULT_QUADRATURE_ORDER,
        &[],
        Some((lo, hi)),
        |_| 1.0,
        0,
        0,
    )
    .expect("unit weight is finite");
    symmetrize(&mut m);
    m
}

fn symmetrize(m: &mut BandedRealMatrix) {
    let n = m.dim();
    for i in 0..n {
        for j in i + 1..(i + HALF_BANDWIDTH + 1).min(n) {
            let v = 0.5 * (m.get(i, j) + m.get(j, i));
            m.set(i, j, v);
            m.set(j, i, v);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid_basis::{eval_spline, SplineId};

    /// Adaptive Gauss-Legendre on `[a, b]`, bisecting until the 10-point rule
    /// agrees with its two halves.
    fn adaptive(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let rule = GaussLegendre::new(10);
        let whole: f64 = rule.on_interval(a, b).map(|(x, w)| w * f(x)).sum();
        let m = 0.5 * (a + b);
        let left: f64 = rule.on_interval(a, m).map(|(x, w)| w * f(x)).sum();
        let right: f64 = rule.on_interval(m, b).map(|(x, w)| w * f(x)).sum();
        if (left + right - whole).abs() <= tol || depth == 0 {
            left + right
        } else {
            adaptive(f, a, m, 0.5 * tol, depth - 1) + adaptive(f, m, b, 0.5 * tol, depth - 1)
        }
    }

    fn oracle(grid: &Grid1D, k: usize, j: usize, dr: u8, w: &dyn Fn(f64) -> f64) -> f64 {
        let (sk, sj) = (SplineId::from_index(k), SplineId::from_index(j));
        let f = |x: f64| eval_spline(grid, sk, x, 0) * w(x) * eval_spline(grid, sj, x, dr);
        // integrate element by element so the kinks sit on interval ends
        grid.nodes()
            .windows(2)
            .map(|ab| adaptive(&f, ab[0], ab[1], 1e-15, 30))
            .sum()
    }

    #[test]
    fn overlap_diagonal_on_uniform_grid() {
        let h = 0.37;
        let g = Grid1D::uniform(0.0, 10.0 * h, 10).unwrap();
        let s = assemble_overlap(&g);
        for k in (0..g.basis_len()).step_by(2) {
            assert!((s.get(k, k) - 26.0 * h / 35.0).abs() < 1e-14);
            assert!((oracle(&g, k, k, 0, &|_| 1.0) - 26.0 * h / 35.0).abs() < 1e-14);
        }
    }

    #[test]
    fn overlap_is_spd_and_sparse() {
        let g = Grid1D::from_nodes(vec![0.0, 0.1, 0.5, 0.6, 1.4, 2.0]).unwrap();
        let s = assemble_overlap(&g);
        let dense = s.to_dense();
        assert_eq!(dense, dense.transpose());
        let eig = dense.clone().symmetric_eigen();
        assert!(eig.eigenvalues.min() > 0.0);
        // nodes two apart share no element
        for k in 0..g.basis_len() {
            for j in 0..g.basis_len() {
                if (k / 2).abs_diff(j / 2) >= 2 {
                    assert_eq!(dense[(k, j)], 0.0);
                }
            }
        }
    }

    #[test]
    fn derivative_matrix() {
        let h = 0.25;
        let g = Grid1D::uniform(0.0, 8.0 * h, 8).unwrap();
        let d = assemble_first_derivative(&g);
        let n = g.basis_len();
        for k in 0..n {
            assert_eq!(d.get(k, k), 0.0);
            for j in 0..n {
                assert!((d.get(k, j) + d.get(j, k)).abs() < 1e-14);
            }
        }
        for k in (0..n - 2).step_by(2) {
            assert!((d.get(k, k + 2) - 0.5).abs() < 1e-14);
            assert!((oracle(&g, k, k + 2, 1, &|_| 1.0) - 0.5).abs() < 1e-14);
        }
        let lumpy = Grid1D::from_nodes(vec![0.0, 0.3, 0.45, 1.0, 1.2]).unwrap();
        let d = assemble_first_derivative(&lumpy);
        for k in 0..lumpy.basis_len() {
            for j in 0..lumpy.basis_len() {
                let o = oracle(&lumpy, k, j, 1, &|_| 1.0);
                assert!((d.get(k, j) - o).abs() < 1e-12, "{k} {j}");
            }
        }
    }

    #[test]
    fn weighted_reduces_to_overlap() {
        let g = Grid1D::from_nodes(vec![0.0, 0.1, 0.5, 0.6, 1.4, 2.0]).unwrap();
        let s = assemble_overlap(&g);
        let one = assemble_weighted(&g, 8, |_| 1.0).unwrap();
        let three = assemble_weighted(&g, 8, |_| 3.0).unwrap();
        for k in 0..g.basis_len() {
            for j in 0..g.basis_len() {
                assert!((one.get(k, j) - s.get(k, j)).abs() < 1e-13);
                assert!((three.get(k, j) - 3.0 * s.get(k, j)).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn inverse_r_against_adaptive_quadrature() {
        let g = Grid1D::semilog(1e-6, 0.2, 24, 0.0, 1.0).unwrap();
        let w = assemble_weighted(&g, DEFAULT_QUADRATURE_ORDER, |r| 1.0 / r).unwrap();
        let inv = |r: f64| 1.0 / r;
        for k in 0..g.basis_len() {
            for j in k.saturating_sub(3)..(k + 4).min(g.basis_len()) {
                let o = oracle(&g, k, j, 0, &inv);
                assert!(
                    (w.get(k, j) - o).abs() <= 1e-10 * o.abs(),
                    "{k} {j}: {} vs {o}",
                    w.get(k, j)
                );
            }
        }
    }

    #[test]
    fn non_finite_weight_is_rejected() {
        let g = Grid1D::uniform(-1.0, 1.0, 3).unwrap();
        let err = assemble_weighted(&g, 8, |x| if x > 0.5 { f64::NAN } else { 1.0 });
        assert!(matches!(err, Err(Error::NonFinite { .. })));
    }

    #[test]
    fn split_weight_with_a_jump() {
        let g = Grid1D::uniform(0.0, 1.0, 4).unwrap();
        let step = |x: f64| if x < 0.4 { 1.0 } else { 2.0 };
        let w = assemble_weighted_split(&g, 4, &[0.4], step).unwrap();
        for k in 0..g.basis_len() {
            for j in 0..g.basis_len() {
                let (sk, sj) = (SplineId::from_index(k), SplineId::from_index(j));
                let f = |x: f64| eval_spline(&g, sk, x, 0) * step(x) * eval_spline(&g, sj, x, 0);
                let o = [0.0, 0.25, 0.4, 0.5, 0.75, 1.0]
                    .windows(2)
                    .map(|ab| adaptive(&f, ab[0], ab[1], 1e-15, 30))
                    .sum::<f64>();
                assert!((w.get(k, j) - o).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn partial_overlaps_sum_to_overlap() {
        let g = Grid1D::from_nodes(vec![0.0, 0.1, 0.5, 0.6, 1.4, 2.0]).unwrap();
        let s = assemble_overlap(&g);
        let left = assemble_partial_overlap(&g, 0.0, 0.77);
        let right = assemble_partial_overlap(&g, 0.77, 2.0);
        for k in 0..g.basis_len() {
            for j in 0..g.basis_len() {
                assert!((left.get(k, j) + right.get(k, j) - s.get(k, j)).abs() < 1e-14);
            }
        }
    }
}
