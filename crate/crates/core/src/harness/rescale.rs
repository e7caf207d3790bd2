use crate::bubble::{bubble_profile, BubbleSpec};
use crate::diff::{derivative, laplacian_radial, second_derivative};
use crate::error::{LabError, Result};
use crate::field::{PowerTail, RadialField};
use crate::params::ModelParams;

/// `v(y) = u(ε y) / sup u` with `ε = (sup u)^{-2/(n-2)}`.
#[derive(Debug, Clone)]
pub struct Normalized {
    pub eps: f64,
    pub sup_u: f64,
    /// Lives on the physical grid divided by `eps`.
    pub v: RadialField,
}

impl Normalized {
    /// Moves a physical-coordinate field `f(x)` onto the rescaled grid as `f(ε y)`.
    pub fn pull_back(&self, f: &RadialField) -> Result<RadialField> {
        if f.len() != self.v.len() {
            return Err(LabError::GridMismatch);
        }
        f.relabel(self.v.grid_arc().clone())
    }
}

/// Rescales a positive field whose maximum sits at the origin.
pub fn normalize_blowup(u: &RadialField, params: &ModelParams) -> Result<Normalized> {
    params.validate()?;
    if let Some(x) = u.values().iter().find(|x| !(**x > 0.0)) {
        return Err(LabError::NonPositive(format!("blow-up profile has sample {x}")));
    }
    let (i, sup_u) = u.argmax();
    if u.values()[i] > u.values()[0] {
        return Err(LabError::MaxNotAtOrigin { radius: u.nodes()[i] });
    }
    let eps = sup_u.powf(-2.0 / (params.dim() - 2.0));
    // Dividing rather than multiplying by the reciprocal keeps `v(0) = 1` exact.
    let moved = u.rescaled(1.0 / eps, 1.0);
    let tail = moved.tail().map(|t| PowerTail {
        coeff: t.coeff / sup_u,
        power: t.power,
    });
    let values = moved.values().iter().map(|x| x / sup_u).collect();
    Ok(Normalized {
        eps,
        sup_u,
        v: RadialField::new(moved.grid_arc().clone(), values, tail)?,
    })
}

/// `sup |Δv + q̃ v^p - ε² Ṽ v|` on the rescaled grid, with `q̃(y) = q_u(εy)` and
/// `Ṽ(y) = V(εy)`.
pub fn rescaled_residual(
    v: &RadialField,
    q_tilde: &RadialField,
    v_tilde: &RadialField,
    eps: f64,
    params: &ModelParams,
) -> Result<f64> {
    v.ensure_same_grid(q_tilde)?;
    v.ensure_same_grid(v_tilde)?;
    let lap = laplacian_radial(v, params.n)?;
    let p = params.p_crit();
    let e2 = eps * eps;
    Ok(lap
        .values()
        .iter()
        .zip(v.values())
        .zip(q_tilde.values().iter().zip(v_tilde.values()))
        .map(|((l, v), (q, w))| (l + q * v.powf(p) - e2 * w * v).abs())
        .fold(0.0, f64::max))
}

fn reach(v: &RadialField, radius: f64) -> Result<usize> {
    let available = v.grid().r_max();
    if radius > available * (1.0 + 1e-12) {
        return Err(LabError::DomainTooSmall {
            needed: radius,
            available,
        });
    }
    Ok(v.nodes().partition_point(|&y| y <= radius * (1.0 + 1e-12)))
}

fn difference(v: &RadialField, params: &ModelParams) -> Result<RadialField> {
    let z = bubble_profile(&BubbleSpec::unit(params.n, params.q)?, v.grid_arc().clone());
    v.sub(&z)
}

/// `A = max_{|y| <= 1/ε} |v - Z|` and the radius where it is attained.
pub fn deviation_from_bubble(v: &RadialField, params: &ModelParams, eps: f64) -> Result<(f64, f64)> {
    let count = reach(v, 1.0 / eps)?;
    let d = difference(v, params)?;
    let mut best = (0.0, 0.0);
    for (y, x) in v.nodes()[..count].iter().zip(d.values()) {
        if x.abs() > best.0 {
            best = (x.abs(), *y);
        }
    }
    Ok(best)
}

/// `‖v - Z‖_{C²(B_radius)}`: the largest of the sups of `|v - Z|` and its first
/// two discrete derivatives.
pub fn c2_deviation(v: &RadialField, params: &ModelParams, radius: f64) -> Result<f64> {
    let count = reach(v, radius)?;
    let d = difference(v, params)?;
    let d1 = derivative(&d)?;
    let d2 = second_derivative(&d)?;
    let sup = |f: &RadialField| f.values()[..count].iter().fold(0.0f64, |m, x| m.max(x.abs()));
    Ok(sup(&d).max(sup(&d1)).max(sup(&d2)))
}
