use std::sync::Arc;

use serde::Serialize;

use crate::error::{LabError, Result};
use crate::field::{PowerTail, RadialField};
use crate::grid::RadialGrid;
use crate::params::critical_exponent;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ShootOutcome {
    Decayed,
    HitZero,
    BlewUp,
}

#[derive(Debug, Clone)]
pub struct ShootResult {
    /// Samples on the nodes reached; a premature stop truncates the grid.
    pub profile: RadialField,
    pub max_radius_reached: f64,
    pub outcome: ShootOutcome,
}

const RTOL: f64 = 1e-12;
const ATOL: f64 = 1e-15;
const OVERFLOW: f64 = 1e150;

/// Integrates `v'' + (n-1)/r v' + Q v^p = 0`, `v(0) = v0`, `v'(0) = 0`, outward
/// through the grid nodes with Dormand–Prince 5(4) steps.
///
/// The singular origin is bridged by the Taylor expansion
/// `v0 + a₂ r² + a₄ r⁴` evaluated at `min(r₁, 10⁻³)`.
pub fn shoot_limit_profile(n: usize, q: f64, v0: f64, grid: Arc<RadialGrid>) -> Result<ShootResult> {
    if !(v0 > 0.0 && v0.is_finite()) {
        return Err(LabError::InvalidInitial(v0));
    }
    if !(q > 0.0) || n < 3 {
        return Err(LabError::InvalidParams(format!(
            "shooting needs Q > 0 and n >= 3, got Q={q}, n={n}"
        )));
    }
    let p = critical_exponent(n);
    let nf = n as f64;
    let rhs = |r: f64, y: [f64; 2]| -> [f64; 2] { [y[1], -(nf - 1.0) / r * y[1] - q * y[0].max(0.0).powf(p)] };

    let x = grid.nodes();
    let a2 = -q * v0.powf(p) / (2.0 * nf);
    let a4 = -q * p * v0.powf(p - 1.0) * a2 / (4.0 * (nf + 2.0));
    let rs = x[1].min(1e-3);
    let mut r = rs;
    let mut y = [
        v0 + a2 * rs * rs + a4 * rs.powi(4),
        2.0 * a2 * rs + 4.0 * a4 * rs.powi(3),
    ];
    let mut h = 0.1 * rs;
    let mut values = vec![v0];
    let mut outcome = ShootOutcome::Decayed;
    'nodes: for &target in &x[1..] {
        while r < target {
            let step = h.min(target - r);
            let (cand, err) = dp45(&rhs, r, y, step);
            let scale0 = ATOL + RTOL * y[0].abs().max(cand[0].abs());
            let scale1 = ATOL + RTOL * y[1].abs().max(cand[1].abs());
            let e = (err[0] / scale0).abs().max((err[1] / scale1).abs());
            if !e.is_finite() || !cand[0].is_finite() {
                outcome = ShootOutcome::BlewUp;
                break 'nodes;
            }
            if e <= 1.0 {
                r = if step == target - r { target } else { r + step };
                y = cand;
                if y[0] <= 0.0 {
                    outcome = ShootOutcome::HitZero;
                    break 'nodes;
                }
                if y[0].abs() > OVERFLOW {
                    outcome = ShootOutcome::BlewUp;
                    break 'nodes;
                }
            }
            let factor = if e == 0.0 {
                5.0
            } else {
                (0.9 * e.powf(-0.2)).clamp(0.2, 5.0)
            };
            h = step * factor;
        }
        values.push(y[0]);
    }
    let reached = values.len();
    let max_radius_reached = if outcome == ShootOutcome::Decayed {
        grid.r_max()
    } else {
        r
    };
    let profile = if reached == x.len() {
        let big_r = grid.r_max();
        let tail = PowerTail::new(values[reached - 1] * big_r.powf(nf - 2.0), nf - 2.0)?;
        RadialField::new(grid, values, Some(tail))?
    } else {
        let keep = reached.max(3);
        values.resize(keep, 0.0);
        let prefix = Arc::new(RadialGrid::from_nodes(x[..keep].to_vec())?);
        RadialField::new(prefix, values, None)?
    };
    Ok(ShootResult {
        profile,
        max_radius_reached,
        outcome,
    })
}

fn dp45<F: Fn(f64, [f64; 2]) -> [f64; 2]>(f: &F, r: f64, y: [f64; 2], h: f64) -> ([f64; 2], [f64; 2]) {
    let comb = |k: &[[f64; 2]], a: &[f64]| -> [f64; 2] {
        let mut out = y;
        for (ki, ai) in k.iter().zip(a) {
            out[0] += h * ai * ki[0];
            out[1] += h * ai * ki[1];
        }
        out
    };
    let k1 = f(r, y);
    let k2 = f(r + h / 5.0, comb(&[k1], &[1.0 / 5.0]));
    let k3 = f(r + 3.0 * h / 10.0, comb(&[k1, k2], &[3.0 / 40.0, 9.0 / 40.0]));
    let k4 = f(
        r + 4.0 * h / 5.0,
        comb(&[k1, k2, k3], &[44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0]),
    );
    let k5 = f(
        r + 8.0 * h / 9.0,
        comb(
            &[k1, k2, k3, k4],
            &[19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0],
        ),
    );
    let k6 = f(
        r + h,
        comb(
            &[k1, k2, k3, k4, k5],
            &[
                9017.0 / 3168.0,
                -355.0 / 33.0,
                46732.0 / 5247.0,
                49.0 / 176.0,
                -5103.0 / 18656.0,
            ],
        ),
    );
    let b = [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ];
    let next = comb(&[k1, k2, k3, k4, k5, k6], &b);
    let k7 = f(r + h, next);
    let e = [
        71.0 / 57600.0,
        0.0,
        -71.0 / 16695.0,
        71.0 / 1920.0,
        -17253.0 / 339200.0,
        22.0 / 525.0,
        -1.0 / 40.0,
    ];
    let ks = [k1, k2, k3, k4, k5, k6, k7];
    let mut err = [0.0; 2];
    for (k, ei) in ks.iter().zip(e) {
        err[0] += h * ei * k[0];
        err[1] += h * ei * k[1];
    }
    (next, err)
}
