use serde::Serialize;

use super::convolve::{riesz_convolve, RingKernelTable};
use crate::error::{LabError, Result};
use crate::field::RadialField;
use crate::params::ModelParams;

/// `q_u = |x|^{-ℓ} * u^{2n/(n-2)}` with its sup and membership in `Q_K`.
#[derive(Debug, Clone)]
pub struct Quotient {
    pub field: RadialField,
    pub sup: f64,
    pub bound: f64,
    pub in_class: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuotientSummary {
    pub sup: f64,
    pub bound: f64,
    pub in_class: bool,
}

impl Quotient {
    pub fn summary(&self) -> QuotientSummary {
        QuotientSummary {
            sup: self.sup,
            bound: self.bound,
            in_class: self.in_class,
        }
    }
}

pub fn quotient_field(u: &RadialField, params: &ModelParams) -> Result<Quotient> {
    let f = density(u, params)?;
    wrap(riesz_convolve(&f, params.n, params.ell)?, params)
}

/// Same as [`quotient_field`] with a prebuilt table for `u`'s grid.
pub fn quotient_field_with(table: &RingKernelTable, u: &RadialField, params: &ModelParams) -> Result<Quotient> {
    if table.n() != params.n || table.ell() != params.ell {
        return Err(LabError::InvalidParams(format!(
            "table built for (n={}, ell={}), parameters have (n={}, ell={})",
            table.n(),
            table.ell(),
            params.n,
            params.ell
        )));
    }
    let f = density(u, params)?;
    wrap(table.apply(&f)?, params)
}

fn density(u: &RadialField, params: &ModelParams) -> Result<RadialField> {
    params.validate()?;
    if let Some(v) = u.values().iter().find(|v| !(**v >= 0.0)) {
        return Err(LabError::NonPositive(format!("quotient of a field with sample {v}")));
    }
    let p = params.p_conv();
    if let Some(t) = u.tail() {
        let required = (params.dim() - params.ell) / p;
        if t.power <= required {
            return Err(LabError::DivergentTail {
                power: t.power,
                required,
            });
        }
    }
    Ok(u.powf(p))
}

fn wrap(field: RadialField, params: &ModelParams) -> Result<Quotient> {
    let sup = field.values().iter().fold(0.0, |m: f64, v| m.max(*v));
    Ok(Quotient {
        field,
        sup,
        bound: params.k_quot,
        in_class: sup <= params.k_quot,
    })
}
