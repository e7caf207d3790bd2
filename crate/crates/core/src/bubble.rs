//! Aubin–Talenti profiles `Z(r) = (1 + c r²)^{(2-n)/2}`, `c = Q / (n(n-2))`,
//! which solve `ΔZ + Q Z^{(n+2)/(n-2)} = 0` with `Z(0) = 1`, and their
//! rescalings `z_ε(r) = ε^{(2-n)/2} Z(r/ε)`.

use std::sync::Arc;

use serde::Serialize;

use crate::diff::{laplacian_mode, laplacian_radial};
use crate::error::{LabError, Result};
use crate::field::{PowerTail, RadialField};
use crate::fit::{powerlaw_fit, RateFit};
use crate::grid::RadialGrid;
use crate::params::{critical_exponent, ModelParams};
use crate::quad::{adaptive_gk, sphere_area};
use crate::riesz::{quotient_field_with, RingKernelTable};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BubbleSpec {
    pub n: usize,
    pub q: f64,
    pub eps: f64,
}

impl BubbleSpec {
    pub fn new(n: usize, q: f64, eps: f64) -> Result<Self> {
        if n < 3 {
            return Err(LabError::InvalidParams(format!("dimension {n} < 3")));
        }
        if !(q > 0.0 && q.is_finite()) {
            return Err(LabError::InvalidParams(format!("Q must be positive, got {q}")));
        }
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(LabError::InvalidParams(format!("eps must be positive, got {eps}")));
        }
        Ok(Self { n, q, eps })
    }

    pub fn unit(n: usize, q: f64) -> Result<Self> {
        Self::new(n, q, 1.0)
    }

    pub fn with_eps(&self, eps: f64) -> Result<Self> {
        Self::new(self.n, self.q, eps)
    }

    fn c(&self) -> f64 {
        self.q / (self.n * (self.n - 2)) as f64
    }

    fn half(&self) -> f64 {
        0.5 * (2.0 - self.n as f64)
    }

    /// `z_ε(r)`.
    pub fn value(&self, r: f64) -> f64 {
        let y = r / self.eps;
        self.eps.powf(self.half()) * (1.0 + self.c() * y * y).powf(self.half())
    }

    /// `z_ε'(r)`.
    pub fn derivative(&self, r: f64) -> f64 {
        let y = r / self.eps;
        let c = self.c();
        let nf = self.n as f64;
        self.eps.powf(self.half() - 1.0) * (2.0 - nf) * c * y * (1.0 + c * y * y).powf(-0.5 * nf)
    }

    /// Leading far field `A r^{2-n}` with `A = ε^{(n-2)/2} c^{(2-n)/2}`.
    pub fn tail(&self) -> PowerTail {
        PowerTail {
            coeff: self.eps.powf(-self.half()) * self.c().powf(self.half()),
            power: self.n as f64 - 2.0,
        }
    }

    pub fn p(&self) -> f64 {
        critical_exponent(self.n)
    }
}

pub fn bubble_profile(spec: &BubbleSpec, grid: Arc<RadialGrid>) -> RadialField {
    RadialField::from_fn(grid, |r| spec.value(r), Some(spec.tail()))
}

/// Pointwise `Δz + Q z^p` with the discrete Laplacian.
pub fn bubble_residual_field(spec: &BubbleSpec, grid: Arc<RadialGrid>) -> Result<RadialField> {
    let z = bubble_profile(spec, grid);
    let lap = laplacian_radial(&z, spec.n)?;
    let p = spec.p();
    let values = lap
        .values()
        .iter()
        .zip(z.values())
        .map(|(l, v)| l + spec.q * v.powf(p))
        .collect();
    RadialField::new(z.grid_arc().clone(), values, None)
}

/// `sup |Δz + Q z^p|` over the grid: zero for the exact profile, so this is pure
/// discretization error.
pub fn bubble_residual(spec: &BubbleSpec, grid: Arc<RadialGrid>) -> Result<f64> {
    Ok(bubble_residual_field(spec, grid)?.sup_abs())
}

/// `sup |Δ_m w + p Q Z^{p-1} w|` for the linearization at `z_ε`.
pub fn linearized_residual(w: &RadialField, spec: &BubbleSpec, mode: usize) -> Result<f64> {
    if mode > 1 {
        return Err(LabError::InvalidParams(format!("angular mode {mode} not in {{0, 1}}")));
    }
    let lap = laplacian_mode(w, spec.n, mode)?;
    let p = spec.p();
    Ok(lap
        .values()
        .iter()
        .zip(w.values())
        .zip(w.nodes())
        .map(|((l, v), &r)| (l + p * spec.q * spec.value(r).powf(p - 1.0) * v).abs())
        .fold(0.0, f64::max))
}

/// Generator of dilations: `r z'(r) + ((n-2)/2) z`.
pub fn scaling_mode(spec: &BubbleSpec, grid: Arc<RadialGrid>) -> RadialField {
    let k = 0.5 * (spec.n as f64 - 2.0);
    let tail = PowerTail {
        coeff: spec.tail().coeff * (k - (spec.n as f64 - 2.0)),
        power: spec.n as f64 - 2.0,
    };
    RadialField::from_fn(grid, |r| r * spec.derivative(r) + k * spec.value(r), Some(tail))
}

/// Radial profile `z'(r)` of a translation mode, living in the `m = 1` sector.
pub fn translation_mode(spec: &BubbleSpec, grid: Arc<RadialGrid>) -> RadialField {
    RadialField::from_fn(grid, |r| spec.derivative(r), None)
}

/// `q_Z(0) = |S^{n-1}| ∫_0^∞ r^{n-1-ℓ} Z(r)^{2n/(n-2)} dr` by adaptive quadrature
/// after the map `r = t / (1 - t)`.
pub fn bubble_quotient_origin(n: usize, q: f64, ell: f64) -> Result<f64> {
    let spec = BubbleSpec::unit(n, q)?;
    if !(ell > 0.0 && ell < n as f64) {
        return Err(LabError::InvalidParams(format!("ell = {ell} outside (0, {n})")));
    }
    let pc = crate::params::convolution_exponent(n);
    let e = n as f64 - 1.0 - ell;
    let integrand = |t: f64| {
        if t >= 1.0 {
            return 0.0;
        }
        let r = t / (1.0 - t);
        r.powf(e) * spec.value(r).powf(pc) / ((1.0 - t) * (1.0 - t))
    };
    Ok(sphere_area(n) * adaptive_gk(integrand, 0.0, 1.0, 1e-15, 1e-13))
}

/// Closed form of `q_Z` for `n = 3`, `ℓ = 1`:
/// `q_Z(r) = (π / 2c) (1/(1 + c r²) + atan(√c r)/(√c r))` with `c = Q/3`.
pub fn bubble_quotient_3d(q: f64, r: f64) -> f64 {
    let c = q / 3.0;
    let x = c.sqrt() * r;
    let ratio = if x < 1e-4 { 1.0 - x * x / 3.0 } else { x.atan() / x };
    std::f64::consts::PI / (2.0 * c) * (1.0 / (1.0 + x * x) + ratio)
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalingCheck {
    /// Power law of `sup q_{z_ε}` against `ε`.
    pub fit: RateFit,
    /// `max |q_{z_ε}(ε y) - ε^{-ℓ} q_Z(y)| / sup q_{z_ε}` over sampled `y`.
    pub max_covariance_error: f64,
    pub sups: Vec<(f64, f64)>,
}

const COVARIANCE_SAMPLES: [f64; 6] = [0.0, 0.25, 0.5, 1.0, 2.0, 4.0];

/// Computes `q_{z_ε}` for each `ε` on the shared physical grid and checks
/// `q_{z_ε}(x) = ε^{-ℓ} q_Z(x/ε)` against the `ε = 1` member.
pub fn quotient_scaling_check(eps_list: &[f64], params: &ModelParams, grid: Arc<RadialGrid>) -> Result<ScalingCheck> {
    params.validate()?;
    if eps_list.len() < 2 {
        return Err(LabError::InsufficientData {
            needed: 2,
            got: eps_list.len(),
        });
    }
    let base = BubbleSpec::unit(params.n, params.q)?;
    let table = RingKernelTable::build(grid.clone(), params.n, params.ell)?;
    let q1 = quotient_field_with(&table, &bubble_profile(&base, grid.clone()), params)?.field;
    let mut sups = Vec::with_capacity(eps_list.len());
    let mut worst = 0.0f64;
    for &eps in eps_list {
        let spec = base.with_eps(eps)?;
        let q = quotient_field_with(&table, &bubble_profile(&spec, grid.clone()), params)?;
        let scale = eps.powf(-params.ell);
        for y in COVARIANCE_SAMPLES {
            let x = eps * y;
            if x > grid.r_max() || y > grid.r_max() {
                continue;
            }
            let err = (q.field.eval(x) - scale * q1.eval(y)).abs() / q.sup;
            worst = worst.max(err);
        }
        sups.push((eps, q.sup));
    }
    Ok(ScalingCheck {
        fit: powerlaw_fit(&sups)?,
        max_covariance_error: worst,
        sups,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diff::derivative;
    use crate::grid::{make_grid, GridScheme};

    fn uniform(r: f64, n: usize) -> Arc<RadialGrid> {
        Arc::new(make_grid(r, n, GridScheme::Uniform).unwrap())
    }

    #[test]
    fn profile_values() {
        let s = BubbleSpec::unit(6, 24.0).unwrap();
        assert_eq!(s.value(0.0), 1.0);
        assert_eq!(s.value(1.0), 0.25);
        let s = BubbleSpec::new(6, 24.0, 0.1).unwrap();
        assert!((s.value(0.0) - 100.0).abs() < 1e-12);
        let t = BubbleSpec::unit(3, 3.0).unwrap();
        assert!((t.value(2.0) - 5f64.powf(-0.5)).abs() < 1e-15);
    }

    #[test]
    fn tail_is_leading_far_field() {
        for (n, q, eps) in [(6, 24.0, 1.0), (3, 3.0, 0.2), (5, 7.0, 0.5)] {
            let s = BubbleSpec::new(n, q, eps).unwrap();
            let r = 1e4;
            let rel = (s.tail().eval(r) - s.value(r)).abs() / s.value(r);
            assert!(rel < 1e-6, "n={n}: {rel}");
        }
    }

    #[test]
    fn derivative_matches_difference_quotient() {
        let s = BubbleSpec::new(5, 4.0, 0.7).unwrap();
        for r in [0.1, 0.8, 3.0] {
            let h = 1e-6;
            let fd = (s.value(r + h) - s.value(r - h)) / (2.0 * h);
            assert!((fd - s.derivative(r)).abs() < 1e-7);
        }
    }

    #[test]
    fn residual_is_second_order() {
        let s = BubbleSpec::unit(6, 24.0).unwrap();
        let r1 = bubble_residual(&s, uniform(20.0, 1000)).unwrap();
        let r2 = bubble_residual(&s, uniform(20.0, 2000)).unwrap();
        let ratio = r1 / r2;
        assert!((ratio - 4.0).abs() < 0.8, "{ratio}");
    }

    #[test]
    fn wrong_q_leaves_unit_residual() {
        let g = uniform(20.0, 2000);
        let z = bubble_profile(&BubbleSpec::unit(6, 24.0).unwrap(), g.clone());
        let lap = laplacian_radial(&z, 6).unwrap();
        let r0 = lap.values()[0] + 25.0 * z.values()[0].powf(2.0);
        assert!((r0 - 1.0).abs() < 0.05, "{r0}");
    }

    #[test]
    fn kernel_modes_and_non_kernel() {
        let s = BubbleSpec::unit(6, 24.0).unwrap();
        let coarse = uniform(20.0, 1000);
        let fine = uniform(20.0, 2000);
        let a = linearized_residual(&scaling_mode(&s, coarse.clone()), &s, 0).unwrap();
        let b = linearized_residual(&scaling_mode(&s, fine.clone()), &s, 0).unwrap();
        assert!((a / b - 4.0).abs() < 0.8, "{a} {b}");
        let a = linearized_residual(&translation_mode(&s, coarse.clone()), &s, 1).unwrap();
        let b = linearized_residual(&translation_mode(&s, fine), &s, 1).unwrap();
        assert!((a / b - 4.0).abs() < 0.8, "{a} {b}");
        let z = bubble_profile(&s, coarse);
        let r = linearized_residual(&z, &s, 0).unwrap();
        // At the origin the residual is Q (p - 1) = 4Q/(n-2).
        assert!((r - 24.0).abs() < 0.5, "{r}");
        assert!(linearized_residual(&z, &s, 2).is_err());
    }

    #[test]
    fn flat_at_origin() {
        let s = BubbleSpec::unit(6, 24.0).unwrap();
        let d = derivative(&bubble_profile(&s, uniform(20.0, 400))).unwrap();
        assert!(d.values()[0].abs() < 1e-10);
    }

    #[test]
    fn quotient_at_origin() {
        let pi = std::f64::consts::PI;
        assert!((bubble_quotient_origin(3, 3.0, 1.0).unwrap() - pi).abs() < 1e-12);
        assert!((bubble_quotient_3d(3.0, 0.0) - pi).abs() < 1e-15);
        // π³ B(5/2, 7/2) / 2 for n = 6, ℓ = 1, Q = 24.
        assert!((bubble_quotient_origin(6, 24.0, 1.0).unwrap() - 0.570_756_393).abs() < 1e-8);
        let g = uniform(20.0, 1000);
        let p = ModelParams::new(3, 1.0, 12.0);
        let z = bubble_profile(&BubbleSpec::unit(3, 12.0).unwrap(), g.clone());
        let q = crate::riesz::quotient_field(&z, &p).unwrap();
        for (r, v) in g.nodes().iter().zip(q.field.values()).step_by(50) {
            assert!((v - bubble_quotient_3d(12.0, *r)).abs() < 1e-4, "r={r}");
        }
    }

    #[test]
    fn scaling_check() {
        let g = Arc::new(make_grid(40.0, 500, GridScheme::Geometric { ratio: 1.02 }).unwrap());
        let p = ModelParams::new(3, 1.0, 3.0);
        let check = quotient_scaling_check(&[1.0, 0.5, 0.25], &p, g.clone()).unwrap();
        assert!((check.fit.slope + 1.0).abs() < 1e-2, "{:?}", check.fit);
        assert!(check.max_covariance_error < 1e-3);
        assert!(matches!(
            quotient_scaling_check(&[1.0], &p, g),
            Err(LabError::InsufficientData { .. })
        ));
    }
}
