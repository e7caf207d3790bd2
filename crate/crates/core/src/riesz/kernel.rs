use std::f64::consts::PI;

use crate::error::{LabError, Result};
use crate::quad::{adaptive_gk, sphere_area};

// Below this ratio the hypergeometric series needs at most a few hundred terms.
const SERIES_LIMIT: f64 = 0.9;

/// Spherical mean of the Riesz kernel:
/// `W(r, s) = ∫_{S^{n-1}} |r e₁ - s ω|^{-ℓ} dσ(ω)`.
///
/// Symmetric in `(r, s)` and homogeneous of degree `-ℓ`. On the diagonal it is
/// finite only for `ℓ < n - 1`.
pub fn ring_kernel(r: f64, s: f64, n: usize, ell: f64) -> Result<f64> {
    check_params(n, ell)?;
    if !(r >= 0.0 && s >= 0.0) || (r == 0.0 && s == 0.0) {
        return Err(LabError::InvalidParams(format!(
            "ring kernel needs r, s >= 0 not both zero, got ({r}, {s})"
        )));
    }
    if r == s && ell >= n as f64 - 1.0 {
        return Err(LabError::SingularPoint { radius: r });
    }
    Ok(ring_kernel_unchecked(r, s, n, ell))
}

pub(crate) fn check_params(n: usize, ell: f64) -> Result<()> {
    if n < 3 {
        return Err(LabError::InvalidParams(format!("dimension {n} < 3")));
    }
    if !(ell > 0.0 && ell < n as f64) {
        return Err(LabError::InvalidParams(format!("ell = {ell} outside (0, {n})")));
    }
    Ok(())
}

/// Callers guarantee valid `(n, ell)` and `(r, s) ≠ (0, 0)`. Returns `+∞` on a
/// divergent diagonal.
pub(crate) fn ring_kernel_unchecked(r: f64, s: f64, n: usize, ell: f64) -> f64 {
    let big = r.max(s);
    ring_kernel_gap(big, (r - s).abs(), n, ell)
}

/// Kernel from the larger radius and the exact gap `|r - s|`, so pairs closer than
/// the rounding unit of `big` still resolve the diagonal behaviour.
pub(crate) fn ring_kernel_gap(big: f64, gap: f64, n: usize, ell: f64) -> f64 {
    let d = (gap / big).min(1.0);
    big.powf(-ell) * ring_profile(1.0 - d, d, n, ell)
}

/// `w(t) = W(1, t)` for `t ∈ [0, 1]`, with `d = 1 - t` supplied separately.
pub(crate) fn ring_profile(t: f64, d: f64, n: usize, ell: f64) -> f64 {
    if t == 0.0 {
        return sphere_area(n);
    }
    if n == 3 {
        return profile_3d(t, d, ell);
    }
    if t <= SERIES_LIMIT {
        sphere_area(n) * hypergeometric_2f1(0.5 * ell, 0.5 * ell - 0.5 * n as f64 + 1.0, 0.5 * n as f64, t * t)
    } else {
        profile_quadrature(t, d, n, ell)
    }
}

/// Closed form in three dimensions, written with `ln1p`/`expm1` so the concentric
/// limit `t → 0` keeps full precision.
fn profile_3d(t: f64, d: f64, ell: f64) -> f64 {
    let a = 2.0 - ell;
    if a == 0.0 {
        if d == 0.0 {
            return f64::INFINITY;
        }
        return 2.0 * PI / t * (t.ln_1p() - d.ln());
    }
    if d == 0.0 {
        return if a > 0.0 {
            2.0 * PI * 2f64.powf(a) / a
        } else {
            f64::INFINITY
        };
    }
    let lo = d.ln();
    let hi = t.ln_1p();
    // (1+t)^a - (1-t)^a = (1-t)^a · expm1(a (ln(1+t) - ln(1-t)))
    let diff = (a * lo).exp() * (a * (hi - lo)).exp_m1();
    2.0 * PI * diff / (t * a)
}

/// Angular quadrature `|S^{n-2}| ∫_0^π (1 + t² - 2t cos θ)^{-ℓ/2} sin^{n-2} θ dθ`.
///
/// The base is written as `(1-t)² + 4t sin²(θ/2)` to avoid cancellation near the
/// diagonal, and `[0, π]` is pre-split geometrically toward `θ = 0` at the
/// near-singular scale `1 - t`.
pub(crate) fn profile_quadrature(t: f64, d: f64, n: usize, ell: f64) -> f64 {
    let half = -0.5 * ell;
    let k = (n - 2) as i32;
    let integrand = |th: f64| {
        let sh = (0.5 * th).sin();
        let base = d * d + 4.0 * t * sh * sh;
        base.powf(half) * th.sin().powi(k)
    };
    let mut breaks = vec![0.0];
    if d > 0.0 {
        let mut b = d;
        while b < PI {
            breaks.push(b);
            b *= 2.0;
        }
    } else {
        let mut pts: Vec<f64> = (1..60).map(|j| PI * 0.5f64.powi(j)).collect();
        pts.reverse();
        breaks.extend(pts);
    }
    breaks.push(PI);
    let total: f64 = breaks
        .windows(2)
        .map(|w| adaptive_gk(integrand, w[0], w[1], 1e-300, 1e-13))
        .sum();
    sphere_area(n - 1) * total
}

const DEGREE: usize = 20;
const PIECES: usize = 46;

/// Piecewise Chebyshev interpolant of `w` in the gap variable `d = 1 - t`.
///
/// Piece `k` covers `d ∈ [2^{-k-1}, 2^{-k}]`; its nearest singularity (the
/// diagonal `d = 0`) lies three half-widths away, so degree 20 reaches rounding
/// level. Gaps below the last piece fall back to direct evaluation.
#[derive(Debug, Clone)]
pub(crate) struct Profile {
    n: usize,
    ell: f64,
    pieces: Vec<[f64; DEGREE + 1]>,
}

impl Profile {
    pub(crate) fn new(n: usize, ell: f64) -> Self {
        if n == 3 {
            return Self {
                n,
                ell,
                pieces: Vec::new(),
            };
        }
        let m = DEGREE + 1;
        let cheb: Vec<f64> = (0..m).map(|j| (PI * (j as f64 + 0.5) / m as f64).cos()).collect();
        let pieces = (0..PIECES)
            .map(|k| {
                let hi = 0.5f64.powi(k as i32);
                let (mid, half) = (0.75 * hi, 0.25 * hi);
                let vals: Vec<f64> = cheb
                    .iter()
                    .map(|x| {
                        let d = mid + half * x;
                        ring_profile(1.0 - d, d, n, ell)
                    })
                    .collect();
                let mut c = [0.0; DEGREE + 1];
                for (p, cp) in c.iter_mut().enumerate() {
                    let sum: f64 = (0..m)
                        .map(|j| vals[j] * (PI * p as f64 * (j as f64 + 0.5) / m as f64).cos())
                        .sum();
                    *cp = if p == 0 { sum / m as f64 } else { 2.0 * sum / m as f64 };
                }
                c
            })
            .collect();
        Self { n, ell, pieces }
    }

    /// `w(1 - d)` for `d ∈ [0, 1]`.
    pub(crate) fn eval_gap(&self, d: f64) -> f64 {
        if self.pieces.is_empty() || d >= 1.0 || d == 0.0 {
            return ring_profile(1.0 - d, d, self.n, self.ell);
        }
        let e = ((d.to_bits() >> 52) & 0x7ff) as i64 - 1023;
        let k = (-e - 1) as usize;
        if k >= PIECES {
            return ring_profile(1.0 - d, d, self.n, self.ell);
        }
        let hi = 0.5f64.powi(k as i32);
        let x = (d - 0.75 * hi) / (0.25 * hi);
        let c = &self.pieces[k];
        let (mut b1, mut b2) = (0.0, 0.0);
        for &cp in c[1..].iter().rev() {
            let b0 = 2.0 * x * b1 - b2 + cp;
            b2 = b1;
            b1 = b0;
        }
        x * b1 - b2 + c[0]
    }

    pub(crate) fn kernel(&self, r: f64, s: f64) -> f64 {
        self.kernel_gap(r.max(s), (r - s).abs())
    }

    pub(crate) fn kernel_gap(&self, big: f64, gap: f64) -> f64 {
        big.powf(-self.ell) * self.eval_gap((gap / big).min(1.0))
    }
}

/// Gauss series `₂F₁(a, b; c; z)` for `|z| < 1`.
pub(crate) fn hypergeometric_2f1(a: f64, b: f64, c: f64, z: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 0..2000 {
        let kf = k as f64;
        term *= (a + kf) * (b + kf) / ((c + kf) * (kf + 1.0)) * z;
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}
