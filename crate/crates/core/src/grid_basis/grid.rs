use crate::{Error, Result};

/// How a grid was generated.
#[derive(Clone, Debug, PartialEq)]
pub enum GridKind {
    Uniform,
    /// Nodes equally spaced in `zeta(r) = eta * r + xi * ln(r)`.
    SemiLog { eta: f64, xi: f64 },
    Custom,
}

/// Strictly increasing nodes `x_0 < x_1 < ... < x_N`.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid1D {
    nodes: Vec<f64>,
    kind: GridKind,
}

const NEWTON_MAX_ITER: usize = 100;

impl Grid1D {
    /// `intervals + 1` equidistant nodes on `[a, b]`.
    pub fn uniform(a: f64, b: f64, intervals: usize) -> Result<Self> {
        if !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidGrid(format!("non-finite bounds [{a}, {b}]")));
        }
        if a >= b {
            return Err(Error::InvalidGrid(format!("empty interval [{a}, {b}]")));
        }
        check_intervals(intervals)?;
        let h = (b - a) / intervals as f64;
        let mut nodes: Vec<f64> = (0..=intervals).map(|i| a + h * i as f64).collect();
        nodes[intervals] = b;
        Ok(Self {
            nodes,
            kind: GridKind::Uniform,
        })
    }

    /// Semi-logarithmic radial grid on `[r_min, r_max]`.
    ///
    /// The nodes are equally spaced in `zeta(r) = eta * r + xi * ln(r)`; each
    /// node is recovered from its `zeta` value by a bracketed Newton iteration
    /// in `ln r`.
    pub fn semilog(r_min: f64, r_max: f64, intervals: usize, eta: f64, xi: f64) -> Result<Self> {
        if !(r_min > 0.0 && r_max > r_min && r_max.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "semilog grid needs 0 < r_min < r_max, got [{r_min}, {r_max}]"
            )));
        }
        if eta < 0.0 || xi < 0.0 || (eta == 0.0 && xi == 0.0) {
            return Err(Error::InvalidGrid(format!(
                "semilog parameters must be non-negative and not both zero (eta={eta}, xi={xi})"
            )));
        }
        check_intervals(intervals)?;
        let zeta = |r: f64| eta * r + xi * r.ln();
        let (z0, z1) = (zeta(r_min), zeta(r_max));
        let step = (z1 - z0) / intervals as f64;
        let scale = z0.abs().max(z1.abs()).max(z1 - z0);
        let mut nodes = Vec::with_capacity(intervals + 1);
        nodes.push(r_min);
        for i in 1..intervals {
            let target = z0 + step * i as f64;
            nodes.push(invert_zeta(eta, xi, target, r_min, r_max, 4.0 * f64::EPSILON * scale)?);
        }
        nodes.push(r_max);
        Ok(Self {
            nodes,
            kind: GridKind::SemiLog { eta, xi },
        })
    }

    /// Grid from explicit nodes.
    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 3 {
            return Err(Error::InvalidGrid(format!("need at least 3 nodes, got {}", nodes.len())));
        }
        if nodes.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidGrid("non-finite node".into()));
        }
        if let Some(w) = nodes.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid(format!("nodes not increasing at {} -> {}", w[0], w[1])));
        }
        Ok(Self {
            nodes,
            kind: GridKind::Custom,
        })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn kind(&self) -> &GridKind {
        &self.kind
    }

    /// Number of elements `N`.
    pub fn intervals(&self) -> usize {
        self.nodes.len() - 1
    }

    /// Number of nodes carrying basis functions, `N - 1`.
    pub fn interior_nodes(&self) -> usize {
        self.nodes.len() - 2
    }

    /// Number of basis functions, `2 (N - 1)`.
    pub fn basis_len(&self) -> usize {
        2 * self.interior_nodes()
    }

    pub fn start(&self) -> f64 {
        self.nodes[0]
    }

    pub fn end(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    /// Length of element `e`, `x_{e+1} - x_e`.
    pub fn width(&self, e: usize) -> f64 {
        self.nodes[e + 1] - self.nodes[e]
    }

    /// Element containing `x`; the last element owns the right end point.
    pub fn element_of(&self, x: f64) -> Option<usize> {
        if !(x >= self.start() && x <= self.end()) {
            return None;
        }
        let k = self.nodes.partition_point(|&n| n <= x);
        Some(k.saturating_sub(1).min(self.intervals() - 1))
    }

    /// Global basis index of local function `a` (0..4) on element `e`, if it
    /// belongs to an interior node.
    #[inline]
    pub fn local_to_global(&self, e: usize, a: usize) -> Option<usize> {
        let node = e + a / 2;
        if node == 0 || node >= self.intervals() {
            None
        } else {
            Some(2 * (node - 1) + a % 2)
        }
    }
}

fn check_intervals(intervals: usize) -> Result<()> {
    if intervals < 2 {
        return Err(Error::InvalidGrid(format!(
            "need at least 2 intervals for one interior node, got {intervals}"
        )));
    }
    Ok(())
}

fn invert_zeta(eta: f64, xi: f64, target: f64, r_min: f64, r_max: f64, tol: f64) -> Result<f64> {
    // f(s) = eta e^s + xi s - target is increasing and convex in s = ln r
    let f = |s: f64| eta * s.exp() + xi * s - target;
    let (mut lo, mut hi) = (r_min.ln(), r_max.ln());
    let mut s = if eta == 0.0 { target / xi } else { 0.5 * (lo + hi) };
    s = s.clamp(lo, hi);
    for _ in 0..NEWTON_MAX_ITER {
        let fs = f(s);
        if fs.abs() < tol || hi - lo <= f64::EPSILON * s.abs().max(1.0) {
            return Ok(s.exp());
        }
        if fs > 0.0 {
            hi = s;
        } else {
            lo = s;
        }
        let d = eta * s.exp() + xi;
        let next = s - fs / d;
        s = if next > lo && next < hi { next } else { 0.5 * (lo + hi) };
    }
    Err(Error::NewtonDiverged {
        target,
        iterations: NEWTON_MAX_ITER,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_nodes() {
        let g = Grid1D::uniform(0.0, 1.0, 4).unwrap();
        assert_eq!(g.nodes(), &[0.0, 0.25, 0.5, 0.75, 1.0]);
        let g = Grid1D::uniform(-1.0, 1.0, 2).unwrap();
        assert_eq!(g.nodes(), &[-1.0, 0.0, 1.0]);
        let g = Grid1D::uniform(0.0, 10.0, 100).unwrap();
        assert_eq!(g.nodes().len(), 101);
        assert!((g.width(37) - 0.1).abs() < 1e-14);
        assert_eq!(g.basis_len(), 198);
    }

    #[test]
    fn uniform_rejects_bad_input() {
        assert!(Grid1D::uniform(f64::NAN, 1.0, 4).is_err());
        assert!(Grid1D::uniform(0.0, f64::INFINITY, 4).is_err());
        assert!(Grid1D::uniform(1.0, 0.0, 4).is_err());
        assert!(Grid1D::uniform(0.0, 1.0, 1).is_err());
    }

    #[test]
    fn semilog_pure_log_closed_form() {
        let g = Grid1D::semilog(1e-6, 0.2, 50, 0.0, 1.0).unwrap();
        for (a, &r) in g.nodes().iter().enumerate() {
            let expect = 1e-6 * (0.2f64 / 1e-6).powf(a as f64 / 50.0);
            assert!((r - expect).abs() < 1e-12 * expect, "{a}: {r} vs {expect}");
        }
    }

    #[test]
    fn semilog_pure_linear_is_uniform() {
        let g = Grid1D::semilog(0.1, 2.1, 20, 1.0, 0.0).unwrap();
        for (a, &r) in g.nodes().iter().enumerate() {
            assert!((r - (0.1 + 0.1 * a as f64)).abs() < 1e-12);
        }
    }

    #[test]
    fn semilog_zeta_spacing_is_constant() {
        let (eta, xi) = (50.0, 1.0);
        let g = Grid1D::semilog(1e-6, 0.2, 96, eta, xi).unwrap();
        let zeta: Vec<f64> = g.nodes().iter().map(|&r| eta * r + xi * r.ln()).collect();
        let step = (zeta[96] - zeta[0]) / 96.0;
        for w in zeta.windows(2) {
            assert!(((w[1] - w[0]) - step).abs() < 1e-12 * step.abs());
        }
    }

    #[test]
    fn element_lookup() {
        let g = Grid1D::uniform(0.0, 1.0, 4).unwrap();
        assert_eq!(g.element_of(0.0), Some(0));
        assert_eq!(g.element_of(0.3), Some(1));
        assert_eq!(g.element_of(0.5), Some(2));
        assert_eq!(g.element_of(1.0), Some(3));
        assert_eq!(g.element_of(1.5), None);
        assert_eq!(g.local_to_global(0, 0), None);
        assert_eq!(g.local_to_global(0, 2), Some(0));
        assert_eq!(g.local_to_global(1, 1), Some(1));
        assert_eq!(g.local_to_global(3, 2), None);
    }
}
