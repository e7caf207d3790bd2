use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::grid::RadialGrid;
use crate::quad::{compensated_sum, sphere_area};

/// Far-field model `f(r) ≈ coeff · r^{-power}` for `r > r_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerTail {
    pub coeff: f64,
    pub power: f64,
}

impl PowerTail {
    pub fn new(coeff: f64, power: f64) -> Result<Self> {
        if !(power > 0.0 && power.is_finite() && coeff.is_finite()) {
            return Err(LabError::InvalidParams(format!(
                "tail power must be positive, got coeff={coeff}, power={power}"
            )));
        }
        Ok(Self { coeff, power })
    }

    pub fn eval(&self, r: f64) -> f64 {
        self.coeff * r.powf(-self.power)
    }

    /// `coeff · ∫_R^∞ s^{-power} s^{k-1} ds` as a radial integrand in dimension `k`.
    pub fn moment_beyond(&self, r_max: f64, k: usize) -> Option<f64> {
        let excess = self.power - k as f64;
        if excess <= 0.0 {
            return None;
        }
        Some(self.coeff * r_max.powf(-excess) / excess)
    }
}

/// Samples of a radial function on a [`RadialGrid`].
///
/// Without a tail the function is taken to vanish beyond `r_max`.
#[derive(Debug, Clone)]
pub struct RadialField {
    grid: Arc<RadialGrid>,
    values: Vec<f64>,
    tail: Option<PowerTail>,
}

impl RadialField {
    pub fn new(grid: Arc<RadialGrid>, values: Vec<f64>, tail: Option<PowerTail>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(LabError::InvalidGrid(format!(
                "{} values for {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(t) = tail {
            PowerTail::new(t.coeff, t.power)?;
        }
        Ok(Self { grid, values, tail })
    }

    pub fn from_fn<F: Fn(f64) -> f64>(grid: Arc<RadialGrid>, f: F, tail: Option<PowerTail>) -> Self {
        let values = grid.nodes().iter().map(|&r| f(r)).collect();
        Self { grid, values, tail }
    }

    pub fn constant(grid: Arc<RadialGrid>, c: f64) -> Self {
        let values = vec![c; grid.len()];
        Self {
            grid,
            values,
            tail: None,
        }
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn grid_arc(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn tail(&self) -> Option<PowerTail> {
        self.tail
    }

    pub fn with_tail(mut self, tail: Option<PowerTail>) -> Self {
        self.tail = tail;
        self
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        self.grid.nodes()
    }

    pub fn same_grid(&self, other: &RadialField) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || self.grid.nodes() == other.grid.nodes()
    }

    pub fn ensure_same_grid(&self, other: &RadialField) -> Result<()> {
        if self.same_grid(other) {
            Ok(())
        } else {
            Err(LabError::GridMismatch)
        }
    }

    pub fn sup_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Index and value of the largest sample; ties resolve to the smallest radius.
    pub fn argmax(&self) -> (usize, f64) {
        let mut best = (0, self.values[0]);
        for (i, &v) in self.values.iter().enumerate().skip(1) {
            if v > best.1 {
                best = (i, v);
            }
        }
        best
    }

    /// Pointwise map; the tail is dropped.
    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
            tail: None,
        }
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| c * v).collect(),
            tail: self.tail.map(|t| PowerTail {
                coeff: c * t.coeff,
                power: t.power,
            }),
        }
    }

    /// `f^p` for non-negative fields; the tail becomes `(A^p, βp)`.
    pub fn powf(&self, p: f64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v.max(0.0).powf(p)).collect(),
            tail: self.tail.map(|t| PowerTail {
                coeff: t.coeff.max(0.0).powf(p),
                power: t.power * p,
            }),
        }
    }

    pub fn mul(&self, other: &RadialField) -> Result<Self> {
        self.ensure_same_grid(other)?;
        let tail = match (self.tail, other.tail) {
            (Some(a), Some(b)) => Some(PowerTail {
                coeff: a.coeff * b.coeff,
                power: a.power + b.power,
            }),
            _ => None,
        };
        Ok(Self {
            grid: self.grid.clone(),
            values: self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect(),
            tail,
        })
    }

    /// `self + c · other`, keeping the slower-decaying tail.
    pub fn axpy(&self, c: f64, other: &RadialField) -> Result<Self> {
        self.ensure_same_grid(other)?;
        let scaled = other.tail.map(|t| PowerTail {
            coeff: c * t.coeff,
            power: t.power,
        });
        let tail = match (self.tail, scaled) {
            (Some(a), Some(b)) if a.power == b.power => Some(PowerTail {
                coeff: a.coeff + b.coeff,
                power: a.power,
            }),
            (Some(a), Some(b)) => Some(if a.power < b.power { a } else { b }),
            (a, b) => a.or(b),
        };
        Ok(Self {
            grid: self.grid.clone(),
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + c * b).collect(),
            tail,
        })
    }

    pub fn sub(&self, other: &RadialField) -> Result<Self> {
        self.axpy(-1.0, other)
    }

    /// Same samples on the grid scaled by `factor` (`r → factor · r`); `value_scale`
    /// multiplies the samples. The tail is transported consistently.
    pub fn rescaled(&self, factor: f64, value_scale: f64) -> Self {
        let grid = Arc::new(self.grid.scaled(factor));
        let tail = self.tail.map(|t| PowerTail {
            coeff: value_scale * t.coeff * factor.powf(t.power),
            power: t.power,
        });
        Self {
            grid,
            values: self.values.iter().map(|v| value_scale * v).collect(),
            tail,
        }
    }

    /// Samples moved onto `grid`, which must have the same number of nodes.
    pub fn relabel(&self, grid: Arc<RadialGrid>) -> Result<Self> {
        Self::new(grid, self.values.clone(), None)
    }

    /// Power tail `A r^{-β}` matched to the last two nodes, when both are positive
    /// and the local slope is decaying.
    pub fn fitted_tail(&self) -> Option<PowerTail> {
        let n = self.values.len();
        let (r0, r1) = (self.grid.nodes()[n - 2], self.grid.nodes()[n - 1]);
        let (f0, f1) = (self.values[n - 2], self.values[n - 1]);
        if f0 == 0.0 || f1 == 0.0 || f0.signum() != f1.signum() {
            return None;
        }
        let beta = -(f1 / f0).ln() / (r1 / r0).ln();
        if !(beta > 0.0 && beta.is_finite()) {
            return None;
        }
        Some(PowerTail {
            coeff: f1 * r1.powf(beta),
            power: beta,
        })
    }

    /// Value at arbitrary radius: cubic Lagrange interpolation inside the grid,
    /// the tail (or zero) beyond it.
    pub fn eval(&self, r: f64) -> f64 {
        let r = r.abs();
        let nodes = self.grid.nodes();
        let r_max = self.grid.r_max();
        if r > r_max {
            return self.tail.map_or(0.0, |t| t.eval(r));
        }
        let k = self.grid.locate(r);
        let n = nodes.len();
        if n < 4 {
            let (a, b) = (nodes[k], nodes[k + 1]);
            let t = (r - a) / (b - a);
            return self.values[k] * (1.0 - t) + self.values[k + 1] * t;
        }
        let start = k.saturating_sub(1).min(n - 4);
        let xs = &nodes[start..start + 4];
        let ys = &self.values[start..start + 4];
        let mut acc = 0.0;
        for i in 0..4 {
            let mut l = 1.0;
            for j in 0..4 {
                if i != j {
                    l *= (r - xs[j]) / (xs[i] - xs[j]);
                }
            }
            acc += l * ys[i];
        }
        acc
    }

    /// `∫_{ℝⁿ} f dx = |S^{n-1}| ∫_0^∞ f(r) r^{n-1} dr`, trapezoid on the grid
    /// plus the analytic tail beyond `r_max`.
    pub fn radial_integral(&self, n: usize) -> Result<f64> {
        let w = self.grid.volume_weights(n);
        let interior = compensated_sum(w.iter().zip(&self.values).map(|(w, v)| w * v));
        let tail = match self.tail {
            Some(t) => t.moment_beyond(self.grid.r_max(), n).ok_or_else(|| {
                LabError::DivergentIntegral(format!("tail power {} does not exceed dimension {n}", t.power))
            })?,
            None => 0.0,
        };
        Ok(sphere_area(n) * (interior + tail))
    }
}
