use serde::Serialize;

use crate::diff::derivative;
use crate::error::Result;
use crate::field::{PowerTail, RadialField};
use crate::params::ModelParams;
use crate::riesz::{quotient_field, quotient_field_with, Quotient, RingKernelTable};

/// Both sides of `∫ |∇u|² + V u² = ∫ q_u u^{2n/(n-2)}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyBalance {
    pub kinetic: f64,
    pub potential: f64,
    pub nonlocal: f64,
    /// `|kinetic + potential - nonlocal|`.
    pub raw_gap: f64,
    /// `raw_gap / max(1, |nonlocal|)`.
    pub gap: f64,
}

pub fn energy_identity_gap(u: &RadialField, v: &RadialField, params: &ModelParams) -> Result<EnergyBalance> {
    let q = quotient_field(u, params)?;
    balance(u, v, &q, params)
}

pub fn energy_identity_gap_with(
    table: &RingKernelTable,
    u: &RadialField,
    v: &RadialField,
    params: &ModelParams,
) -> Result<EnergyBalance> {
    let q = quotient_field_with(table, u, params)?;
    balance(u, v, &q, params)
}

fn balance(u: &RadialField, v: &RadialField, q: &Quotient, params: &ModelParams) -> Result<EnergyBalance> {
    u.ensure_same_grid(v)?;
    let n = params.n;
    let du = derivative(u)?.with_tail(u.tail().map(|t| PowerTail {
        coeff: -t.power * t.coeff,
        power: t.power + 1.0,
    }));
    let kinetic = du.mul(&du)?.radial_integral(n)?;
    let u2 = u.powf(2.0);
    let potential = v.mul(&u2)?.radial_integral(n)?;
    let nonlocal = q.field.mul(&u.powf(params.p_conv()))?.radial_integral(n)?;
    let raw_gap = (kinetic + potential - nonlocal).abs();
    Ok(EnergyBalance {
        kinetic,
        potential,
        nonlocal,
        raw_gap,
        gap: raw_gap / nonlocal.abs().max(1.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bubble::{bubble_profile, BubbleSpec};
    use crate::grid::{make_grid, GridScheme};
    use crate::solver::manufacture_potential_with;
    use std::sync::Arc;

    #[test]
    fn zero_field_balances() {
        let g = Arc::new(make_grid(10.0, 100, GridScheme::Uniform).unwrap());
        let u = RadialField::constant(g.clone(), 0.0);
        let v = RadialField::constant(g, 1.0);
        let e = energy_identity_gap(&u, &v, &ModelParams::new(6, 1.0, 24.0)).unwrap();
        assert_eq!(e.gap, 0.0);
    }

    #[test]
    fn manufactured_potential_closes_the_identity() {
        let g = Arc::new(make_grid(200.0, 600, GridScheme::Geometric { ratio: 1.01 }).unwrap());
        let p = ModelParams::new(6, 1.0, 24.0);
        let z = bubble_profile(&BubbleSpec::unit(6, 24.0).unwrap(), g.clone());
        let table = RingKernelTable::build(g, 6, 1.0).unwrap();
        let v = manufacture_potential_with(&table, &z, &p).unwrap();
        let e = energy_identity_gap_with(&table, &z, &v, &p).unwrap();
        assert!(e.gap < 1e-3, "{e:?}");
        assert!(e.kinetic > 0.0 && e.nonlocal > 0.0);
    }
}
