use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::quad::GaussLegendre;

/// Node placement rule for a radial grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GridScheme {
    /// Constant spacing `r_max / N`.
    Uniform,
    /// `r_k = r_max (ratio^k - 1) / (ratio^N - 1)`; spacing grows by `ratio` per cell.
    Geometric { ratio: f64 },
    /// Caller-supplied nodes.
    Explicit,
}

/// Strictly increasing radii `0 = r_0 < r_1 < ... < r_N = r_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    nodes: Vec<f64>,
    scheme: GridScheme,
    // Spacing when the nodes are an exact uniform lattice; enables O(1) lookup.
    uniform_step: Option<f64>,
}

pub fn make_grid(r_max: f64, intervals: usize, scheme: GridScheme) -> Result<RadialGrid> {
    RadialGrid::new(r_max, intervals, scheme)
}

impl RadialGrid {
    pub fn new(r_max: f64, intervals: usize, scheme: GridScheme) -> Result<Self> {
        if intervals < 2 {
            return Err(LabError::InvalidGrid(format!(
                "need at least 2 intervals, got {intervals}"
            )));
        }
        if !(r_max > 0.0 && r_max.is_finite()) {
            return Err(LabError::InvalidGrid(format!("r_max = {r_max} must be positive")));
        }
        let n = intervals;
        let nodes: Vec<f64> = match scheme {
            GridScheme::Uniform => {
                let h = r_max / n as f64;
                (0..=n).map(|k| if k == n { r_max } else { k as f64 * h }).collect()
            }
            GridScheme::Explicit => {
                return Err(LabError::InvalidGrid(
                    "explicit grids are built with RadialGrid::from_nodes".into(),
                ))
            }
            GridScheme::Geometric { ratio } => {
                if !(ratio > 1.0 && ratio.is_finite()) {
                    return Err(LabError::InvalidGrid(format!("geometric ratio {ratio} must exceed 1")));
                }
                let denom = ratio.powi(n as i32) - 1.0;
                (0..=n)
                    .map(|k| match k {
                        0 => 0.0,
                        k if k == n => r_max,
                        k => r_max * (ratio.powi(k as i32) - 1.0) / denom,
                    })
                    .collect()
            }
        };
        let uniform_step = matches!(scheme, GridScheme::Uniform).then(|| r_max / n as f64);
        let grid = Self {
            nodes,
            scheme,
            uniform_step,
        };
        grid.check()?;
        Ok(grid)
    }

    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 3 {
            return Err(LabError::InvalidGrid(format!(
                "need at least 3 nodes, got {}",
                nodes.len()
            )));
        }
        let grid = Self {
            nodes,
            scheme: GridScheme::Explicit,
            uniform_step: None,
        };
        grid.check()?;
        Ok(grid)
    }

    fn check(&self) -> Result<()> {
        if self.nodes[0] != 0.0 {
            return Err(LabError::InvalidGrid("first node must be r = 0".into()));
        }
        if self.nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(LabError::InvalidGrid("nodes must be strictly increasing".into()));
        }
        Ok(())
    }

    /// The same grid with every node multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut nodes: Vec<f64> = self.nodes.iter().map(|r| r * factor).collect();
        nodes[0] = 0.0;
        Self {
            nodes,
            scheme: self.scheme,
            uniform_step: self.uniform_step.map(|h| h * factor),
        }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Number of intervals `N`.
    pub fn intervals(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn r_max(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    pub fn scheme(&self) -> GridScheme {
        self.scheme
    }

    pub fn uniform_step(&self) -> Option<f64> {
        self.uniform_step
    }

    /// Index `k` of the cell `[r_k, r_{k+1}]` containing `r`, clamped to the grid.
    pub fn locate(&self, r: f64) -> usize {
        let last = self.nodes.len() - 2;
        if let Some(h) = self.uniform_step {
            let k = (r / h).floor();
            return if k <= 0.0 { 0 } else { (k as usize).min(last) };
        }
        self.nodes.partition_point(|&x| x <= r).saturating_sub(1).min(last)
    }

    /// Trapezoid weights for `∫_0^{r_max} g(r) r^{n-1} dr` with `g` linear between nodes.
    ///
    /// The moments of the hat functions against `r^{n-1}` are integrated exactly.
    pub fn volume_weights(&self, n: usize) -> Vec<f64> {
        let mut w = vec![0.0; self.len()];
        for k in 0..self.intervals() {
            let (a, b) = (self.nodes[k], self.nodes[k + 1]);
            let (left, right) = hat_power_moments(a, b, n as f64 - 1.0);
            w[k] += left;
            w[k + 1] += right;
        }
        w
    }

    /// FNV-1a over the node bit patterns; used to key cached kernel tables.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for r in &self.nodes {
            for b in r.to_bits().to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        }
        h
    }
}

/// `(∫ s^γ (b-s)/(b-a) ds, ∫ s^γ (s-a)/(b-a) ds)` over `[a, b]`, `γ > -1`.
///
/// Closed form on the panel touching the origin, where `s^γ` may be singular;
/// Gauss–Legendre elsewhere, which avoids cancellation when `b - a << a`.
pub(crate) fn hat_power_moments(a: f64, b: f64, gamma: f64) -> (f64, f64) {
    let h = b - a;
    if a == 0.0 {
        let m0 = b.powf(gamma + 1.0) / (gamma + 1.0);
        let m1 = b.powf(gamma + 2.0) / (gamma + 2.0);
        return ((b * m0 - m1) / h, m1 / h);
    }
    let gl = GaussLegendre::cached(8);
    let (mut left, mut right) = (0.0, 0.0);
    for (s, w) in gl.mapped(a, b) {
        let g = w * s.powf(gamma);
        left += g * (b - s) / h;
        right += g * (s - a) / h;
    }
    (left, right)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_nodes() {
        let g = make_grid(1.0, 4, GridScheme::Uniform).unwrap();
        assert_eq!(g.nodes(), &[0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(g.uniform_step(), Some(0.25));
    }

    #[test]
    fn geometric_endpoint() {
        let g = make_grid(10.0, 10, GridScheme::Geometric { ratio: 1.2 }).unwrap();
        assert_eq!(g.r_max(), 10.0);
        assert_eq!(g.nodes()[0], 0.0);
        let d: Vec<f64> = g.nodes().windows(2).map(|w| w[1] - w[0]).collect();
        for w in d.windows(2) {
            assert!((w[1] / w[0] - 1.2).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(matches!(
            make_grid(1.0, 0, GridScheme::Uniform),
            Err(LabError::InvalidGrid(_))
        ));
        assert!(make_grid(0.0, 4, GridScheme::Uniform).is_err());
        assert!(make_grid(1.0, 4, GridScheme::Geometric { ratio: 1.0 }).is_err());
        assert!(RadialGrid::from_nodes(vec![0.0, 0.5, 0.5]).is_err());
        assert!(RadialGrid::from_nodes(vec![0.1, 0.5, 0.7]).is_err());
    }

    #[test]
    fn locate_cells() {
        let u = make_grid(1.0, 4, GridScheme::Uniform).unwrap();
        let g = RadialGrid::from_nodes(u.nodes().to_vec()).unwrap();
        for r in [0.0, 0.1, 0.25, 0.6, 0.99, 1.0, 3.0] {
            assert_eq!(u.locate(r), g.locate(r), "r = {r}");
        }
        assert_eq!(u.locate(1.0), 3);
    }

    #[test]
    fn volume_weights_integrate_powers() {
        let g = make_grid(2.0, 50, GridScheme::Geometric { ratio: 1.05 }).unwrap();
        let w = g.volume_weights(3);
        let total: f64 = w.iter().sum();
        assert!((total - 8.0 / 3.0).abs() < 1e-12);
        let lin: f64 = w.iter().zip(g.nodes()).map(|(w, r)| w * r).sum();
        assert!((lin - 4.0).abs() < 1e-12);
    }
}
