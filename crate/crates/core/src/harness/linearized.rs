use serde::Serialize;

use crate::bubble::BubbleSpec;
use crate::error::{LabError, Result};
use crate::field::RadialField;
use crate::fit::{powerlaw_fit, RateFit};
use crate::params::ModelParams;

/// Below this `|v - Z|` the difference quotient is replaced by its Taylor limit.
pub const TAYLOR_THRESHOLD: f64 = 1e-8;

const FIT_START: f64 = 5.0;

#[derive(Debug, Clone)]
pub struct LinearizedDiagnostics {
    /// `a = Q (v^p - Z^p) / (v - Z)`.
    pub a_field: RadialField,
    /// `w = (v - Z) / sup |v - Z|`; identically zero when `v = Z`.
    pub w_field: RadialField,
    pub deviation: f64,
    /// Power law of `|a|` over `y ∈ [5, y_max / 2]`.
    pub a_decay_fit: RateFit,
    /// `sup (1 + y) |w(y)|`.
    pub w_bound_const: f64,
    pub taylor_nodes: usize,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct LinearizedSummary {
    pub deviation: f64,
    pub a_decay_fit: RateFit,
    pub w_bound_const: f64,
    pub taylor_nodes: usize,
}

impl LinearizedDiagnostics {
    pub fn summary(&self) -> LinearizedSummary {
        LinearizedSummary {
            deviation: self.deviation,
            a_decay_fit: self.a_decay_fit,
            w_bound_const: self.w_bound_const,
            taylor_nodes: self.taylor_nodes,
        }
    }
}

pub fn a_coefficient(v: &RadialField, params: &ModelParams) -> Result<LinearizedDiagnostics> {
    params.validate()?;
    if let Some(x) = v.values().iter().find(|x| !(**x > 0.0)) {
        return Err(LabError::NonPositive(format!("rescaled profile has sample {x}")));
    }
    let spec = BubbleSpec::unit(params.n, params.q)?;
    let p = params.p_crit();
    let q = params.q;
    let mut taylor_nodes = 0;
    let mut a = Vec::with_capacity(v.len());
    let mut diff = Vec::with_capacity(v.len());
    for (&y, &vy) in v.nodes().iter().zip(v.values()) {
        let z = spec.value(y);
        let d = vy - z;
        if d.abs() < TAYLOR_THRESHOLD {
            taylor_nodes += 1;
            a.push(p * q * z.powf(p - 1.0));
        } else {
            a.push(q * (vy.powf(p) - z.powf(p)) / d);
        }
        diff.push(d);
    }
    let deviation = diff.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    let w: Vec<f64> = if deviation > 0.0 {
        diff.iter().map(|d| d / deviation).collect()
    } else {
        vec![0.0; diff.len()]
    };
    let w_bound_const = v
        .nodes()
        .iter()
        .zip(&w)
        .map(|(y, w)| (1.0 + y) * w.abs())
        .fold(0.0, f64::max);
    let stop = 0.5 * v.grid().r_max();
    let points: Vec<(f64, f64)> = v
        .nodes()
        .iter()
        .zip(&a)
        .filter(|(y, a)| **y >= FIT_START && **y <= stop && a.abs() > 0.0)
        .map(|(y, a)| (*y, a.abs()))
        .collect();
    let a_decay_fit = powerlaw_fit(&points)?;
    let grid = v.grid_arc().clone();
    Ok(LinearizedDiagnostics {
        a_field: RadialField::new(grid.clone(), a, None)?,
        w_field: RadialField::new(grid, w, None)?,
        deviation,
        a_decay_fit,
        w_bound_const,
        taylor_nodes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bubble::bubble_profile;
    use crate::diff::derivative;
    use crate::grid::{make_grid, GridScheme, RadialGrid};
    use std::sync::Arc;

    fn grid() -> Arc<RadialGrid> {
        Arc::new(make_grid(100.0, 600, GridScheme::Geometric { ratio: 1.01 }).unwrap())
    }

    fn spec() -> BubbleSpec {
        BubbleSpec::unit(6, 24.0).unwrap()
    }

    #[test]
    fn bubble_uses_the_taylor_branch() {
        let g = grid();
        let z = bubble_profile(&spec(), g.clone());
        let d = a_coefficient(&z, &ModelParams::new(6, 1.0, 24.0)).unwrap();
        assert_eq!(d.taylor_nodes, g.len());
        for (y, a) in g.nodes().iter().zip(d.a_field.values()) {
            assert_eq!(*a, 2.0 * 24.0 * spec().value(*y));
        }
        assert_eq!(d.deviation, 0.0);
        assert!(d.w_field.values().iter().all(|w| *w == 0.0));
        assert!((-4.3..=-3.7).contains(&d.a_decay_fit.slope), "{:?}", d.a_decay_fit);
    }

    #[test]
    fn doubled_bubble() {
        let g = grid();
        let v = bubble_profile(&spec(), g.clone()).scale(2.0);
        let d = a_coefficient(&v, &ModelParams::new(6, 1.0, 24.0)).unwrap();
        for (y, a) in g.nodes().iter().zip(d.a_field.values()) {
            let z = spec().value(*y);
            // Where v - Z = Z drops below the threshold the Taylor value is used.
            let expected = if z < TAYLOR_THRESHOLD { 48.0 * z } else { 72.0 * z };
            assert!((a - expected).abs() <= 1e-13 * expected, "{a} {expected}");
        }
        let sup = d.w_field.sup_abs();
        assert!((sup - 1.0).abs() < 1e-15);
    }

    #[test]
    fn branches_meet_at_the_threshold() {
        // In n = 5 the difference quotient has curvature, so the branches differ
        // by the second Taylor term `p(p-1)/2 · Q Z^{p-2} δ`.
        let g = grid();
        let s = BubbleSpec::unit(5, 15.0).unwrap();
        let p = s.p();
        for &y in &g.nodes()[..300] {
            let z = s.value(y);
            let taylor = p * 15.0 * z.powf(p - 1.0);
            let at = |delta: f64| 15.0 * ((z + delta).powf(p) - z.powf(p)) / delta;
            assert!((at(TAYLOR_THRESHOLD) - taylor).abs() <= 1e-6, "y={y}");
            for delta in [1e-8, 1e-7, 1e-6] {
                let second = 0.5 * p * (p - 1.0) * 15.0 * z.powf(p - 2.0) * delta;
                assert!(
                    (at(delta) - taylor - second).abs() <= 1e-6 * taylor,
                    "y={y} delta={delta}"
                );
            }
        }
    }

    #[test]
    fn w_is_flat_at_the_origin() {
        let g = grid();
        let v = RadialField::from_fn(g, |y| spec().value(y) * (1.0 - 1e-2 * y * y / (1.0 + y * y)), None);
        let d = a_coefficient(&v, &ModelParams::new(6, 1.0, 24.0)).unwrap();
        assert_eq!(d.w_field.values()[0], 0.0);
        assert!(derivative(&d.w_field).unwrap().values()[0].abs() < 1e-12);
        assert!(d.w_bound_const >= 1.0);
    }
}
