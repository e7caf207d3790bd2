use serde::Serialize;

use crate::error::Result;
use crate::field::RadialField;
use crate::norms::{decay_constant, holder_norm};
use crate::params::ModelParams;
use crate::riesz::{quotient_field, quotient_field_with, RingKernelTable};

/// `‖q_u - Q‖_{C^{0,α}(B_r)} · (sup u)^{n-2}` and the class data around it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Hypothesis {
    pub product: f64,
    pub holder: f64,
    pub sup_u: f64,
    pub decay_constant: f64,
    pub quotient_sup: f64,
    /// `L* <= L` and `sup q_u <= K`.
    pub in_class: bool,
}

pub fn hypothesis_product(u: &RadialField, params: &ModelParams) -> Result<Hypothesis> {
    params.validate()?;
    decay_constant(u, params.rho, params.n)?;
    let q = quotient_field(u, params)?;
    hypothesis_product_with_quotient(u, &q.field, params)
}

pub fn hypothesis_product_with(table: &RingKernelTable, u: &RadialField, params: &ModelParams) -> Result<Hypothesis> {
    params.validate()?;
    decay_constant(u, params.rho, params.n)?;
    let q = quotient_field_with(table, u, params)?;
    hypothesis_product_with_quotient(u, &q.field, params)
}

/// Same diagnostics for a quotient supplied by the caller.
pub fn hypothesis_product_with_quotient(u: &RadialField, q: &RadialField, params: &ModelParams) -> Result<Hypothesis> {
    params.validate()?;
    u.ensure_same_grid(q)?;
    let decay = decay_constant(u, params.rho, params.n)?;
    let holder = holder_norm(&q.map(|x| x - params.q), params.alpha, params.r_ball)?;
    let sup_u = u.values().iter().fold(0.0f64, |m, x| m.max(*x));
    let quotient_sup = q.values().iter().fold(0.0f64, |m, x| m.max(*x));
    Ok(Hypothesis {
        product: holder * sup_u.powf(params.dim() - 2.0),
        holder,
        sup_u,
        decay_constant: decay,
        quotient_sup,
        in_class: decay <= params.l_decay && quotient_sup <= params.k_quot,
    })
}
