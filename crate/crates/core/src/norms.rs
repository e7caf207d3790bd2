use rayon::prelude::*;

use crate::error::{LabError, Result};
use crate::field::RadialField;

/// Sup norm over the nodes with `r <= radius`.
pub fn sup_norm_on_ball(f: &RadialField, radius: f64) -> Result<f64> {
    let count = nodes_within(f, radius)?;
    Ok(f.values()[..count].iter().fold(0.0f64, |m, v| m.max(v.abs())))
}

fn nodes_within(f: &RadialField, radius: f64) -> Result<usize> {
    let r_max = f.grid().r_max();
    // Allow a relative slack of a few ulps so `radius == r_max` survives rescaling.
    if radius > r_max * (1.0 + 1e-12) || radius < 0.0 {
        return Err(LabError::OutOfRange { radius, r_max });
    }
    Ok(f.nodes().partition_point(|&r| r <= radius * (1.0 + 1e-12)))
}

/// `‖f‖_{C^{0,α}(B_radius)} = sup |f| + sup_{r≠s} |f(r) - f(s)| / |r - s|^α`.
///
/// For radial functions the ball seminorm is attained on a ray, so the
/// exhaustive search over node pairs is exact up to sampling. `alpha = 0`
/// returns the sup norm alone.
pub fn holder_norm(f: &RadialField, alpha: f64, radius: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(LabError::InvalidParams(format!(
            "Hölder exponent {alpha} not in [0, 1)"
        )));
    }
    let count = nodes_within(f, radius)?;
    let sup = f.values()[..count].iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if alpha == 0.0 {
        return Ok(sup);
    }
    Ok(sup + holder_seminorm(&f.nodes()[..count], &f.values()[..count], alpha))
}

/// Row-parallel pair search; each row is reduced sequentially, then rows by `max`,
/// which is order-independent.
pub(crate) fn holder_seminorm(r: &[f64], v: &[f64], alpha: f64) -> f64 {
    (0..r.len())
        .into_par_iter()
        .map(|i| {
            let mut best = 0.0f64;
            for j in i + 1..r.len() {
                let q = (v[j] - v[i]).abs() / (r[j] - r[i]).powf(alpha);
                best = best.max(q);
            }
            best
        })
        .reduce(|| 0.0, f64::max)
}

/// `L* = sup_{r >= rho} r^{n-2} f(r)`, including the tail beyond the grid.
///
/// `f` belongs to `C_{rho,L}` iff `L* <= L`. A field without a tail model is
/// accepted only if it vanishes at `r_max` (compact support).
pub fn decay_constant(f: &RadialField, rho: f64, n: usize) -> Result<f64> {
    let r_max = f.grid().r_max();
    if !(rho < r_max) {
        return Err(LabError::OutOfRange { radius: rho, r_max });
    }
    if f.values().iter().any(|&v| v < 0.0) {
        return Err(LabError::NonPositive("decay constant needs f >= 0".into()));
    }
    let k = (n - 2) as f64;
    let on_grid = f
        .nodes()
        .iter()
        .zip(f.values())
        .filter(|(&r, _)| r >= rho)
        .map(|(&r, &v)| r.powf(k) * v)
        .fold(0.0, f64::max);
    let beyond = match f.tail() {
        Some(t) if t.power < k => return Err(LabError::NoDecay(format!("tail power {} below n - 2 = {k}", t.power))),
        // r^{n-2} A r^{-β} is non-increasing for β >= n - 2; its sup is at r_max.
        Some(t) => t.coeff * r_max.powf(k - t.power),
        None if *f.values().last().unwrap() != 0.0 => {
            return Err(LabError::NoDecay(
                "no tail model and the field does not vanish at r_max".into(),
            ))
        }
        None => 0.0,
    };
    Ok(on_grid.max(beyond))
}
