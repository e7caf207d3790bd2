//! Brute-force reference for the three-dimensional Riesz potential.
//!
//! `∫_{[-R,R]³} |y|^{-ℓ} f(|x - y|) dy` on a tensor grid of `M³` boxes with a
//! Gauss–Legendre product rule per box. Boxes are uniform in a central core and
//! grow geometrically outside it, so the far field is covered without
//! truncating slowly decaying densities. The eight cubes meeting at `y = 0` are
//! split into pyramids with apex at the origin; in the radial pyramid coordinate
//! `t = τ²` the kernel singularity becomes the smooth weight `τ^{5-2ℓ}`.
//! Targets lie on the first axis, so the integrand is even in `y₂`, `y₃` and
//! symmetric under their exchange; only one eighth of the cubes is visited.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::field::RadialField;
use crate::grid::RadialGrid;
use crate::quad::{compensated_sum, GaussLegendre};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    /// Boxes per axis; must be even so that `y = 0` is a vertex.
    pub cells: usize,
    pub half_width: f64,
    /// Uniform core `[-c, c]` and the number of boxes per half-axis inside it.
    pub core_half_width: f64,
    pub core_cells: usize,
    pub points_per_cell: usize,
    /// Rule used on the cubes next to the origin and inside the pyramids.
    pub near_points: usize,
    pub max_cells: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            cells: 64,
            half_width: 40.0,
            core_half_width: 4.0,
            core_cells: 20,
            points_per_cell: 3,
            near_points: 8,
            max_cells: 128,
        }
    }
}

/// Oracle values at the nodes of `targets`.
pub fn riesz_oracle(
    f: &RadialField,
    n: usize,
    ell: f64,
    targets: Arc<RadialGrid>,
    cfg: &OracleConfig,
) -> Result<RadialField> {
    if n != 3 {
        return Err(LabError::InvalidParams(format!(
            "oracle is three-dimensional, got n = {n}"
        )));
    }
    if !(ell > 0.0 && ell < 3.0) {
        return Err(LabError::InvalidParams(format!("ell = {ell} outside (0, 3)")));
    }
    if cfg.cells > cfg.max_cells {
        return Err(LabError::TooLarge {
            m: cfg.cells,
            cap: cfg.max_cells,
        });
    }
    if cfg.cells < 4 || !cfg.cells.is_multiple_of(2) {
        return Err(LabError::InvalidParams(format!(
            "oracle needs an even cell count >= 4, got {}",
            cfg.cells
        )));
    }
    if !(cfg.half_width > 0.0) || cfg.points_per_cell == 0 || cfg.near_points == 0 {
        return Err(LabError::InvalidParams("oracle rule sizes must be positive".into()));
    }
    if !(cfg.core_half_width > 0.0 && cfg.core_half_width <= cfg.half_width)
        || cfg.core_cells == 0
        || cfg.core_cells > cfg.cells / 2
    {
        return Err(LabError::InvalidParams("oracle core must fit inside the box".into()));
    }
    let values = targets.nodes().par_iter().map(|&x| oracle_at(f, ell, x, cfg)).collect();
    RadialField::new(targets, values, None)
}

/// `max_j |q(r_j) - oracle_j| / max_j |oracle_j|` with `q` interpolated at the
/// oracle radii.
pub fn relative_sup_error(q: &RadialField, oracle: &RadialField) -> f64 {
    let scale = oracle.sup_abs();
    let worst = oracle
        .nodes()
        .iter()
        .zip(oracle.values())
        .map(|(&r, &o)| (q.eval(r) - o).abs())
        .fold(0.0, f64::max);
    if scale == 0.0 {
        worst
    } else {
        worst / scale
    }
}

struct AxisRule {
    points: Vec<f64>,
    weights: Vec<f64>,
    per_cell: usize,
}

/// Box edges along one axis, symmetric about 0.
fn axis_edges(cfg: &OracleConfig) -> Vec<f64> {
    let half = cfg.cells / 2;
    let h0 = cfg.core_half_width / cfg.core_cells as f64;
    let outer = half - cfg.core_cells;
    let span = cfg.half_width - cfg.core_half_width;
    let mut right = vec![0.0];
    for k in 1..=cfg.core_cells {
        right.push(k as f64 * h0);
    }
    if outer > 0 {
        // Growth ratio ρ with h0 (ρ + ρ² + … + ρ^outer) = span, or uniform when ρ <= 1.
        let total = |rho: f64| (1..=outer).map(|k| h0 * rho.powi(k as i32)).sum::<f64>();
        let rho = if total(1.0) >= span {
            None
        } else {
            let (mut lo, mut hi) = (1.0, 2.0);
            while total(hi) < span {
                hi *= 2.0;
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if total(mid) < span {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            Some(0.5 * (lo + hi))
        };
        for k in 1..=outer {
            let e = match rho {
                Some(rho) => cfg.core_half_width + (1..=k).map(|j| h0 * rho.powi(j as i32)).sum::<f64>(),
                None => cfg.core_half_width + span * k as f64 / outer as f64,
            };
            right.push(e);
        }
        *right.last_mut().unwrap() = cfg.half_width;
    }
    let mut edges: Vec<f64> = right.iter().rev().map(|e| -e).collect();
    edges.extend_from_slice(&right[1..]);
    edges
}

impl AxisRule {
    fn new(edges: &[f64], order: usize) -> Self {
        let gl = GaussLegendre::cached(order);
        let cells = edges.len() - 1;
        let mut points = Vec::with_capacity(cells * order);
        let mut weights = Vec::with_capacity(cells * order);
        for c in 0..cells {
            for (p, w) in gl.mapped(edges[c], edges[c + 1]) {
                points.push(p);
                weights.push(w);
            }
        }
        Self {
            points,
            weights,
            per_cell: order,
        }
    }

    fn cell(&self, c: usize) -> impl Iterator<Item = (f64, f64)> + '_ {
        let s = c * self.per_cell;
        self.points[s..s + self.per_cell]
            .iter()
            .copied()
            .zip(self.weights[s..s + self.per_cell].iter().copied())
    }
}

fn oracle_at(f: &RadialField, ell: f64, x: f64, cfg: &OracleConfig) -> f64 {
    let m = cfg.cells;
    let c0 = m / 2;
    let edges = axis_edges(cfg);
    let h = edges[c0 + 1];
    let base = AxisRule::new(&edges, cfg.points_per_cell);
    let near = AxisRule::new(&edges, cfg.near_points);
    let density = |y1: f64, y2: f64, y3: f64| f.eval(((x - y1) * (x - y1) + y2 * y2 + y3 * y3).sqrt());
    let integrand = |y1: f64, y2: f64, y3: f64| (y1 * y1 + y2 * y2 + y3 * y3).powf(-0.5 * ell) * density(y1, y2, y3);
    let mut parts = Vec::new();
    for iy in c0..m {
        for iz in c0..=iy {
            let mult = if iz < iy { 8.0 } else { 4.0 };
            let mut slab = Vec::with_capacity(m);
            for ix in 0..m {
                let touches = iy == c0 && iz == c0 && (ix == c0 || ix + 1 == c0);
                if touches {
                    let sign = if ix == c0 { 1.0 } else { -1.0 };
                    slab.push(mult * origin_cube(&density, h, sign, cfg.near_points, ell));
                    continue;
                }
                let is_near = ix + 2 >= c0 && ix <= c0 + 1 && iy <= c0 + 1 && iz <= c0 + 1;
                let rule = if is_near { &near } else { &base };
                let mut acc = 0.0;
                for (y1, w1) in rule.cell(ix) {
                    for (y2, w2) in rule.cell(iy) {
                        for (y3, w3) in rule.cell(iz) {
                            acc += w1 * w2 * w3 * integrand(y1, y2, y3);
                        }
                    }
                }
                slab.push(mult * acc);
            }
            parts.push(compensated_sum(slab));
        }
    }
    compensated_sum(parts)
}

/// Cube `[0, h]³` (first coordinate reflected by `sign`) as three pyramids with
/// apex at the origin and bases on the far faces.
fn origin_cube<F: Fn(f64, f64, f64) -> f64>(density: &F, h: f64, sign: f64, order: usize, ell: f64) -> f64 {
    let gl = GaussLegendre::cached(order);
    let radial = GaussLegendre::cached(order.max(12));
    let mut total = 0.0;
    for face in 0..3 {
        for (a, wa) in gl.mapped(0.0, h) {
            for (b, wb) in gl.mapped(0.0, h) {
                let p = match face {
                    0 => [h, a, b],
                    1 => [a, h, b],
                    _ => [a, b, h],
                };
                let norm = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
                // ∫_0^1 h t² |t p|^{-ℓ} f dt = 2 h |p|^{-ℓ} ∫_0^1 τ^{5-2ℓ} f(τ² p) dτ
                let mut inner = 0.0;
                for (tau, wt) in radial.mapped(0.0, 1.0) {
                    let t = tau * tau;
                    inner += wt * tau.powf(5.0 - 2.0 * ell) * density(sign * t * p[0], t * p[1], t * p[2]);
                }
                total += wa * wb * 2.0 * h * norm.powf(-ell) * inner;
            }
        }
    }
    total
}
