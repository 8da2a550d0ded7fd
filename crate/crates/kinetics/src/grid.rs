//! Radial energy grid and isotropic distributions sampled on it.
//!
//! Energies are the dimensionless eps = p^2. A single quadrature weight
//! vector (composite quadratic rule, order 4 on smooth integrands) is owned
//! by the grid and used consistently by moments and by the collision
//! operator's conservative assembly, so that discrete conservation laws are
//! statements about one fixed functional.

use std::sync::Arc;

use crate::error::KineticsError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridSpacing {
    Uniform,
    Geometric,
}

#[derive(Debug, Clone)]
pub struct RadialGrid {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    sqrt_nodes: Vec<f64>,
    spacing: GridSpacing,
}

impl RadialGrid {
    /// Geometric grid clustering nodes near eps = 0; the default for blow-up
    /// runs is `geometric(256, 1e-4, 1e2)`.
    pub fn geometric(n: usize, eps_min: f64, eps_max: f64) -> Result<Arc<Self>, KineticsError> {
        if n < 8 {
            return Err(KineticsError::Grid(format!("need at least 8 nodes, got {n}")));
        }
        if !(eps_min > 0.0 && eps_max > eps_min) {
            return Err(KineticsError::Grid(format!(
                "geometric grid needs 0 < eps_min < eps_max, got [{eps_min}, {eps_max}]"
            )));
        }
        let ratio = (eps_max / eps_min).powf(1.0 / (n as f64 - 1.0));
        let nodes: Vec<f64> = (0..n)
            .map(|i| {
                if i == n - 1 {
                    eps_max
                } else {
                    eps_min * ratio.powi(i as i32)
                }
            })
            .collect();
        Self::from_nodes(nodes, GridSpacing::Geometric)
    }

    pub fn uniform(n: usize, eps_min: f64, eps_max: f64) -> Result<Arc<Self>, KineticsError> {
        if n < 8 {
            return Err(KineticsError::Grid(format!("need at least 8 nodes, got {n}")));
        }
        if !(eps_min >= 0.0 && eps_max > eps_min) {
            return Err(KineticsError::Grid(format!(
                "uniform grid needs 0 <= eps_min < eps_max, got [{eps_min}, {eps_max}]"
            )));
        }
        let h = (eps_max - eps_min) / (n as f64 - 1.0);
        let nodes: Vec<f64> = (0..n).map(|i| eps_min + h * i as f64).collect();
        Self::from_nodes(nodes, GridSpacing::Uniform)
    }

    /// Default grid for the isotropic solver: 256 geometric nodes on
    /// [1e-4, 1e2], resolving the self-similar region over three decades.
    pub fn default_iso() -> Arc<Self> {
        Self::geometric(256, 1e-4, 1e2).expect("default grid parameters are valid")
    }

    pub fn from_nodes(nodes: Vec<f64>, spacing: GridSpacing) -> Result<Arc<Self>, KineticsError> {
        if nodes.len() < 8 {
            return Err(KineticsError::Grid("need at least 8 nodes".into()));
        }
        if nodes[0] < 0.0 {
            return Err(KineticsError::Grid("eps_0 must be >= 0".into()));
        }
        if nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(KineticsError::Grid("nodes must be strictly increasing".into()));
        }
        if nodes.iter().any(|x| !x.is_finite()) {
            return Err(KineticsError::Grid("nodes must be finite".into()));
        }
        let weights = composite_weights(&nodes);
        if weights.iter().any(|&w| !(w > 0.0)) {
            return Err(KineticsError::Grid(
                "quadrature weights not positive; node spacing too irregular".into(),
            ));
        }
        let sqrt_nodes = nodes.iter().map(|&x| x.sqrt()).collect();
        Ok(Arc::new(RadialGrid {
            nodes,
            weights,
            sqrt_nodes,
            spacing,
        }))
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn sqrt_nodes(&self) -> &[f64] {
        &self.sqrt_nodes
    }

    pub fn spacing(&self) -> GridSpacing {
        self.spacing
    }

    pub fn eps_min(&self) -> f64 {
        self.nodes[0]
    }

    pub fn eps_max(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    /// integral of `values` against the grid rule.
    pub fn integrate(&self, values: impl Iterator<Item = f64>) -> f64 {
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }

    /// Largest i with nodes[i] <= x, clamped to len-2; caller checks support.
    pub fn bracket(&self, x: f64) -> usize {
        let n = self.nodes.len();
        match self.nodes.partition_point(|&v| v <= x) {
            0 => 0,
            k => (k - 1).min(n - 2),
        }
    }
}

/// Composite quadratic (Simpson-type) weights on arbitrary increasing nodes.
/// Interval pairs get the 3-point quadratic rule; a leading odd interval is
/// closed with the trapezoid, which on a geometric grid is the smallest cell.
fn composite_weights(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut w = vec![0.0; n];
    let mut start = 0;
    if (n - 1) % 2 == 1 {
        let h = x[1] - x[0];
        w[0] += h / 2.0;
        w[1] += h / 2.0;
        start = 1;
    }
    let mut i = start;
    while i + 2 <= n - 1 {
        let a = x[i + 1] - x[i];
        let b = x[i + 2] - x[i + 1];
        w[i] += (a + b) * (2.0 * a - b) / (6.0 * a);
        w[i + 1] += (a + b).powi(3) / (6.0 * a * b);
        w[i + 2] += (a + b) * (2.0 * b - a) / (6.0 * b);
        i += 2;
    }
    w
}

/// Isotropic one-particle distribution f(eps) on a radial grid.
#[derive(Debug, Clone)]
pub struct DistributionIso {
    values: Vec<f64>,
    grid: Arc<RadialGrid>,
}

impl DistributionIso {
    pub fn new(grid: Arc<RadialGrid>, values: Vec<f64>) -> Result<Self, KineticsError> {
        if values.len() != grid.len() {
            return Err(KineticsError::Grid(format!(
                "value count {} does not match grid size {}",
                values.len(),
                grid.len()
            )));
        }
        for (i, &v) in values.iter().enumerate() {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(KineticsError::NegativeDistribution {
                    at: grid.nodes()[i],
                    value: v,
                });
            }
        }
        Ok(DistributionIso { values, grid })
    }

    pub fn zero(grid: Arc<RadialGrid>) -> Self {
        let n = grid.len();
        DistributionIso {
            values: vec![0.0; n],
            grid,
        }
    }

    pub fn from_fn(grid: Arc<RadialGrid>, f: impl Fn(f64) -> f64) -> Result<Self, KineticsError> {
        let values: Vec<f64> = grid.nodes().iter().map(|&e| f(e)).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().cloned().fold(0.0, f64::max)
    }

    /// Occupation at arbitrary eps by linear interpolation, zero outside
    /// the grid range.
    pub fn interp_linear(&self, eps: f64) -> f64 {
        interp_lagrange(self.grid.nodes(), &self.values, eps, 2).max(0.0)
    }

    /// Occupation at arbitrary |p| (eps = p^2), linear in eps, zero beyond
    /// the grid range.
    pub fn interp_at_momentum(&self, p: f64) -> f64 {
        self.interp_linear(p * p)
    }
}

/// Lagrange interpolation of tabulated values with a stencil of `width`
/// nodes (2 = linear, 4 = cubic, 6 = quintic), clamped at the boundaries.
/// Returns 0 outside the table range.
pub fn interp_lagrange(xs: &[f64], ys: &[f64], x: f64, width: usize) -> f64 {
    let n = xs.len();
    if x < xs[0] || x > xs[n - 1] {
        return 0.0;
    }
    let k = match xs.partition_point(|&v| v <= x) {
        0 => 0,
        k => (k - 1).min(n - 2),
    };
    let half = width / 2;
    let lo = k.saturating_sub(half - 1).min(n - width);
    let mut acc = 0.0;
    for a in 0..width {
        let xa = xs[lo + a];
        let mut la = 1.0;
        for b in 0..width {
            if b != a {
                let xb = xs[lo + b];
                la *= (x - xb) / (xa - xb);
            }
        }
        acc += la * ys[lo + a];
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn geometric_grid_shape() {
        let g = RadialGrid::geometric(256, 1e-4, 1e2).unwrap();
        assert_eq!(g.len(), 256);
        assert_relative_eq!(g.eps_min(), 1e-4);
        assert_relative_eq!(g.eps_max(), 1e2);
        assert!(g.nodes().windows(2).all(|w| w[1] > w[0]));
        assert!(g.weights().iter().all(|&w| w > 0.0));
    }

    #[test]
    fn quadrature_is_order_four_on_smooth_integrands() {
        // int_0^1 sqrt(eps) * exp(-eps) related smooth test: use exp(-x) on [0,1]
        let exact = 1.0 - (-1.0f64).exp();
        let mut errs = vec![];
        for &n in &[33usize, 65, 129] {
            let g = RadialGrid::uniform(n, 0.0, 1.0).unwrap();
            let approx_val = g.integrate(g.nodes().iter().map(|&x| (-x).exp()));
            errs.push((approx_val - exact).abs());
        }
        let order1 = (errs[0] / errs[1]).log2();
        let order2 = (errs[1] / errs[2]).log2();
        assert!(order1 > 3.5 && order2 > 3.5, "orders {order1} {order2}");
    }

    #[test]
    fn quadrature_handles_odd_interval_count() {
        // 256 nodes = 255 intervals: leading trapezoid cell
        let g = RadialGrid::geometric(256, 1e-4, 1e2).unwrap();
        let val = g.integrate(g.nodes().iter().map(|&x| x * x));
        let exact = (1e2f64.powi(3) - 1e-4f64.powi(3)) / 3.0;
        assert_relative_eq!(val, exact, max_relative = 1e-6);
    }

    #[test]
    fn interp_reproduces_polynomials_up_to_stencil_order() {
        let g = RadialGrid::geometric(64, 1e-2, 10.0).unwrap();
        let xs = g.nodes();
        let poly = |x: f64| 1.0 + x * (0.5 + x * (0.25 + x * (0.125 + x * 0.0625)));
        let ys: Vec<f64> = xs.iter().map(|&x| poly(x)).collect();
        for &x in &[0.013, 0.4, 2.77, 9.3] {
            let v6 = interp_lagrange(xs, &ys, x, 6);
            assert_relative_eq!(v6, poly(x), max_relative = 1e-12);
        }
        // outside support -> 0
        assert_eq!(interp_lagrange(xs, &ys, 11.0, 6), 0.0);
        assert_eq!(interp_lagrange(xs, &ys, 1e-3, 6), 0.0);
    }

    #[test]
    fn distribution_rejects_negative_values() {
        let g = RadialGrid::geometric(16, 1e-2, 1.0).unwrap();
        let mut v = vec![0.0; 16];
        v[3] = -1e-9;
        assert!(DistributionIso::new(g, v).is_err());
    }
}
