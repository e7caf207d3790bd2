use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::hypothesis::hypothesis_product_with_quotient;
use super::linearized::{a_coefficient, LinearizedSummary};
use super::rescale::{c2_deviation, deviation_from_bubble, normalize_blowup, rescaled_residual};
use crate::bubble::BubbleSpec;
use crate::error::{LabError, Result};
use crate::field::RadialField;
use crate::fit::{powerlaw_fit, RateFit};
use crate::params::ModelParams;
use crate::riesz::{quotient_field_with, RingKernelTable};
use crate::solver::manufacture_potential_with;

/// Deviations at or below this are rounding noise and carry no rate.
const DEGENERATE_FLOOR: f64 = 1e-12;

/// Bump `φ(y) = (1 - ((y - center)/width)²)⁴` on `|y - center| < width`, with
/// `sup φ = 1`. A family member is `v = Z + amplitude · ε² · φ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Perturbation {
    #[serde(default = "unit")]
    pub amplitude: f64,
    #[serde(default = "unit")]
    pub center: f64,
    #[serde(default = "half")]
    pub width: f64,
}

fn unit() -> f64 {
    1.0
}

fn half() -> f64 {
    0.5
}

impl Default for Perturbation {
    fn default() -> Self {
        Self {
            amplitude: 1.0,
            center: 1.0,
            width: 0.5,
        }
    }
}

impl Perturbation {
    pub fn none() -> Self {
        Self {
            amplitude: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.amplitude.is_finite() {
            return Err(LabError::InvalidParams(format!(
                "amplitude {} is not finite",
                self.amplitude
            )));
        }
        if !(self.width > 0.0 && self.center - self.width > 0.0) {
            return Err(LabError::InvalidParams(format!(
                "bump [{}, {}] must lie strictly inside r > 0",
                self.center - self.width,
                self.center + self.width
            )));
        }
        Ok(())
    }

    pub fn shape(&self, y: f64) -> f64 {
        let s = (y - self.center) / self.width;
        if s.abs() < 1.0 {
            (1.0 - s * s).powi(4)
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BlowupRecord {
    pub eps: f64,
    pub sup_u: f64,
    /// `max_{|y| <= 1/ε} |v - Z|`.
    pub deviation_a: f64,
    pub argmax_y: f64,
    /// `η / ε`.
    pub lambda: f64,
    pub hyp_product: f64,
    pub decay_l: f64,
    pub quot_sup: f64,
    pub in_class: bool,
    /// `|v - Z|` over `|y| <= σ/ε`, i.e. the physical ball `B_σ`.
    pub physical_deviation: f64,
    /// `‖v - Z‖_{C²(B_λ)}`.
    pub c2_deviation: f64,
    pub rescaled_residual: f64,
    pub v_origin: f64,
    pub v_min: f64,
    pub v_max: f64,
    pub linearized: LinearizedSummary,
    #[serde(skip)]
    pub v: RadialField,
}

#[derive(Debug, Clone, Serialize)]
pub struct BlowupExperiment {
    pub records: Vec<BlowupRecord>,
    /// `log A` against `log ε`; absent when the family is degenerate.
    pub fit: Option<RateFit>,
    /// `log ‖v - Z‖_{C²(B_λ)}` against `log ε`, compared with `2 + δ`.
    pub improved_fit: Option<RateFit>,
    pub improved_target: Option<f64>,
    pub degenerate: bool,
}

/// Runs the manufactured family `u_ε = ε^{(2-n)/2} (Z + c ε² φ)(·/ε)`.
///
/// `base` is a table on the rescaled grid; member `ε` lives on `ε` times that
/// grid, so every `v` is sampled at the same `y` nodes. Each member gets its own
/// manufactured potential, which makes `u_ε` an exact discrete solution.
pub fn blowup_rate_experiment(
    eps_list: &[f64],
    perturbation: &Perturbation,
    params: &ModelParams,
    base: &RingKernelTable,
) -> Result<BlowupExperiment> {
    params.validate()?;
    perturbation.validate()?;
    if eps_list.len() < 3 {
        return Err(LabError::InsufficientData {
            needed: 3,
            got: eps_list.len(),
        });
    }
    if eps_list.iter().any(|e| !(*e > 0.0 && e.is_finite())) || eps_list.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(LabError::InvalidParams(format!(
            "eps list {eps_list:?} must be positive and strictly decreasing"
        )));
    }
    let records = eps_list
        .par_iter()
        .map(|&eps| member(eps, perturbation, params, base))
        .collect::<Result<Vec<_>>>()?;
    let degenerate = records.iter().any(|r| r.deviation_a <= DEGENERATE_FLOOR);
    let (fit, improved_fit, improved_target) = if degenerate {
        (None, None, None)
    } else {
        let fit = powerlaw_fit(&records.iter().map(|r| (r.eps, r.deviation_a)).collect::<Vec<_>>())?;
        match params.delta.filter(|d| *d > 0.0) {
            Some(delta) => {
                let pts: Vec<(f64, f64)> = records.iter().map(|r| (r.eps, r.c2_deviation)).collect();
                (Some(fit), Some(powerlaw_fit(&pts)?), Some(2.0 + delta))
            }
            None => (Some(fit), None, None),
        }
    };
    Ok(BlowupExperiment {
        records,
        fit,
        improved_fit,
        improved_target,
        degenerate,
    })
}

fn member(eps: f64, bump: &Perturbation, params: &ModelParams, base: &RingKernelTable) -> Result<BlowupRecord> {
    let table = base.rescaled(eps)?;
    let spec = BubbleSpec::new(params.n, params.q, eps)?;
    let lift = eps.powf(0.5 * (2.0 - params.dim()));
    let size = bump.amplitude * eps * eps;
    let u = RadialField::from_fn(
        table.grid().clone(),
        |r| spec.value(r) + lift * size * bump.shape(r / eps),
        Some(spec.tail()),
    );
    let q = quotient_field_with(&table, &u, params)?;
    let potential = manufacture_potential_with(&table, &u, params)?;
    let nb = normalize_blowup(&u, params)?;
    let residual = rescaled_residual(
        &nb.v,
        &nb.pull_back(&q.field)?,
        &nb.pull_back(&potential)?,
        nb.eps,
        params,
    )?;
    let (deviation_a, argmax_y) = deviation_from_bubble(&nb.v, params, nb.eps)?;
    let (physical_deviation, _) = deviation_from_bubble(&nb.v, params, nb.eps / params.sigma_or_default())?;
    let lambda = params.eta / nb.eps;
    let c2 = c2_deviation(&nb.v, params, lambda)?;
    let linearized = a_coefficient(&nb.v, params)?.summary();
    let hyp = hypothesis_product_with_quotient(&u, &q.field, params)?;
    let values = nb.v.values();
    Ok(BlowupRecord {
        eps: nb.eps,
        sup_u: nb.sup_u,
        deviation_a,
        argmax_y,
        lambda,
        hyp_product: hyp.product,
        decay_l: hyp.decay_constant,
        quot_sup: hyp.quotient_sup,
        in_class: hyp.in_class,
        physical_deviation,
        c2_deviation: c2,
        rescaled_residual: residual,
        v_origin: values[0],
        v_min: values.iter().copied().fold(f64::INFINITY, f64::min),
        v_max: values.iter().copied().fold(0.0, f64::max),
        linearized,
        v: nb.v,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_grid, GridScheme};
    use std::sync::Arc;

    fn base() -> RingKernelTable {
        let g = Arc::new(make_grid(100.0, 400, GridScheme::Geometric { ratio: 1.015 }).unwrap());
        RingKernelTable::build(g, 6, 1.0).unwrap()
    }

    #[test]
    fn bump_shape() {
        let b = Perturbation::default();
        assert_eq!(b.shape(1.0), 1.0);
        assert_eq!(b.shape(0.5), 0.0);
        assert_eq!(b.shape(0.0), 0.0);
        assert!(Perturbation { center: 0.3, ..b }.validate().is_err());
    }

    #[test]
    fn family_rate_and_degenerate_flag() {
        let table = base();
        let p = ModelParams::new(6, 1.0, 24.0);
        let eps = [0.2, 0.1, 0.05];
        let e = blowup_rate_experiment(&eps, &Perturbation::default(), &p, &table).unwrap();
        let fit = e.fit.unwrap();
        assert!((fit.slope - 2.0).abs() < 0.05, "{fit:?}");
        for r in &e.records {
            assert_eq!(r.v_origin, 1.0);
            assert!(r.v_max <= 1.0 && r.v_min > 0.0);
            assert!(r.rescaled_residual < 1e-8, "{}", r.rescaled_residual);
        }
        let flat = blowup_rate_experiment(&eps, &Perturbation::none(), &p, &table).unwrap();
        assert!(flat.degenerate && flat.fit.is_none());
        assert!(matches!(
            blowup_rate_experiment(&eps[..2], &Perturbation::default(), &p, &table),
            Err(LabError::InsufficientData { needed: 3, got: 2 })
        ));
        assert!(blowup_rate_experiment(&[0.1, 0.2, 0.05], &Perturbation::default(), &p, &table).is_err());
    }
}
