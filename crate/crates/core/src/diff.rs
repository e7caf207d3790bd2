//! Finite differences on radial grids.
//!
//! Interior nodes use three-point stencils, so every operator here is
//! second-order accurate on smooth grids. At the origin the radial symmetry
//! supplies the missing information: `f'(0) = 0` and `Δf(0) = n f''(0)`, with
//! `f''(0)` taken from the parabola through the first three nodes. The last node
//! uses a one-sided four-point stencil.

use crate::error::{LabError, Result};
use crate::field::RadialField;
use crate::grid::RadialGrid;

/// Fornberg weights for derivatives `0..=order` at `z` from `xs`.
///
/// Returns `w[k][j]`: the weight of `f(xs[j])` in the `k`-th derivative.
pub fn fornberg(z: f64, xs: &[f64], order: usize) -> Vec<Vec<f64>> {
    let n = xs.len();
    let mut c = vec![vec![0.0; n]; order + 1];
    let mut c1 = 1.0;
    let mut c4 = xs[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - z;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// One stencil row: node offsets and weights for `f'` and `f''`.
#[derive(Debug, Clone)]
pub(crate) struct Stencil {
    pub start: usize,
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
}

pub(crate) fn stencils(grid: &RadialGrid) -> Result<Vec<Stencil>> {
    let x = grid.nodes();
    let len = x.len();
    if len < 3 {
        return Err(LabError::InvalidGrid(format!(
            "finite differences need at least 3 nodes, got {len}"
        )));
    }
    let mut out = Vec::with_capacity(len);
    // Origin: f'(0) = 0 by symmetry; f''(0) from the parabola through three nodes.
    let w = fornberg(0.0, &x[0..3], 2);
    out.push(Stencil {
        start: 0,
        d1: vec![0.0; 3],
        d2: w[2].clone(),
    });
    for i in 1..len - 1 {
        let w = fornberg(x[i], &x[i - 1..i + 2], 2);
        out.push(Stencil {
            start: i - 1,
            d1: w[1].clone(),
            d2: w[2].clone(),
        });
    }
    let tail = len.min(4);
    let start = len - tail;
    let w = fornberg(x[len - 1], &x[start..], 2);
    out.push(Stencil {
        start,
        d1: w[1].clone(),
        d2: w[2].clone(),
    });
    Ok(out)
}

fn apply(st: &Stencil, w: &[f64], f: &[f64]) -> f64 {
    w.iter().zip(&f[st.start..]).map(|(w, v)| w * v).sum()
}

/// Discrete `f'`.
pub fn derivative(f: &RadialField) -> Result<RadialField> {
    let st = stencils(f.grid())?;
    let values = st.iter().map(|s| apply(s, &s.d1, f.values())).collect();
    RadialField::new(f.grid_arc().clone(), values, None)
}

/// Discrete `f''`.
pub fn second_derivative(f: &RadialField) -> Result<RadialField> {
    let st = stencils(f.grid())?;
    let values = st.iter().map(|s| apply(s, &s.d2, f.values())).collect();
    RadialField::new(f.grid_arc().clone(), values, None)
}

/// `Δf = f'' + (n-1)/r f'` for a radial function in `ℝⁿ`.
pub fn laplacian_radial(f: &RadialField, n: usize) -> Result<RadialField> {
    laplacian_mode(f, n, 0)
}

/// Spherical-harmonic sector `m` of the Laplacian:
/// `Δ_m f = f'' + (n-1)/r f' - m(m+n-2)/r² f`.
///
/// For `m ≥ 1` the profile is written as `f = r^m g` with `g` even, and
/// `Δ_m f = r^m (g'' + (n+2m-1)/r g')` is differenced instead. Differencing
/// `f` directly loses an order next to the origin, where `1/r` amplifies the
/// truncation error of an odd profile. The origin value is zero.
pub fn laplacian_mode(f: &RadialField, n: usize, m: usize) -> Result<RadialField> {
    let st = stencils(f.grid())?;
    let x = f.nodes();
    let v = f.values();
    if m == 0 {
        let nf = n as f64;
        let out = st
            .iter()
            .enumerate()
            .map(|(i, s)| {
                if i == 0 {
                    nf * apply(s, &s.d2, v)
                } else {
                    apply(s, &s.d2, v) + (nf - 1.0) / x[i] * apply(s, &s.d1, v)
                }
            })
            .collect();
        return RadialField::new(f.grid_arc().clone(), out, None);
    }
    let mi = m as i32;
    let mut g: Vec<f64> = x
        .iter()
        .zip(v)
        .map(|(r, v)| if *r > 0.0 { v / r.powi(mi) } else { 0.0 })
        .collect();
    // Even extrapolation g(0) from the next two nodes.
    let (r1, r2) = (x[1] * x[1], x[2] * x[2]);
    g[0] = (r2 * g[1] - r1 * g[2]) / (r2 - r1);
    let k = (n + 2 * m) as f64 - 1.0;
    let mut out = vec![0.0; v.len()];
    for i in 1..v.len() {
        let s = &st[i];
        out[i] = x[i].powi(mi) * (apply(s, &s.d2, &g) + k / x[i] * apply(s, &s.d1, &g));
    }
    RadialField::new(f.grid_arc().clone(), out, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_grid, GridScheme};
    use std::sync::Arc;

    fn uniform(r: f64, n: usize) -> Arc<RadialGrid> {
        Arc::new(make_grid(r, n, GridScheme::Uniform).unwrap())
    }

    #[test]
    fn fornberg_central_weights() {
        let w = fornberg(0.0, &[-1.0, 0.0, 1.0], 2);
        assert_eq!(w[1], vec![-0.5, 0.0, 0.5]);
        assert_eq!(w[2], vec![1.0, -2.0, 1.0]);
    }

    #[test]
    fn laplacian_of_r_squared() {
        for n in 3..=10 {
            let f = RadialField::from_fn(uniform(3.0, 30), |r| r * r, None);
            let l = laplacian_radial(&f, n).unwrap();
            for v in l.values() {
                assert!((v - 2.0 * n as f64).abs() < 1e-10, "n = {n}: {v}");
            }
        }
    }

    #[test]
    fn laplacian_of_constant_vanishes() {
        let f = RadialField::constant(uniform(1.0, 10), 3.5);
        let l = laplacian_radial(&f, 6).unwrap();
        assert!(l.sup_abs() < 1e-10);
    }

    #[test]
    fn too_few_nodes() {
        let g = Arc::new(RadialGrid::from_nodes(vec![0.0, 1.0, 2.0]).unwrap());
        let f = RadialField::constant(g, 1.0);
        assert!(laplacian_radial(&f, 3).is_ok());
    }

    #[test]
    fn second_order_on_geometric_grids() {
        // Δ(e^{-r²}) = (4r² - 2n) e^{-r²}
        let n = 5;
        let err = |cells: usize| {
            let g = Arc::new(
                make_grid(
                    4.0,
                    cells,
                    GridScheme::Geometric {
                        ratio: 1.0 + 4.0 / cells as f64,
                    },
                )
                .unwrap(),
            );
            let f = RadialField::from_fn(g, |r| (-r * r).exp(), None);
            let l = laplacian_radial(&f, n).unwrap();
            l.nodes()
                .iter()
                .zip(l.values())
                .map(|(r, v)| (v - (4.0 * r * r - 2.0 * n as f64) * (-r * r).exp()).abs())
                .fold(0.0, f64::max)
        };
        let (e1, e2) = (err(200), err(400));
        let order = (e1 / e2).log2();
        assert!(order > 1.7, "observed order {order}");
    }

    #[test]
    fn first_sector_is_second_order() {
        // f = r e^{-r²}: Δ_1 f = r (4r² - 2(n+2)) e^{-r²}
        let n = 6;
        let err = |cells: usize| {
            let f = RadialField::from_fn(uniform(6.0, cells), |r| r * (-r * r).exp(), None);
            let l = laplacian_mode(&f, n, 1).unwrap();
            l.nodes()
                .iter()
                .zip(l.values())
                .map(|(r, v)| (v - r * (4.0 * r * r - 2.0 * (n + 2) as f64) * (-r * r).exp()).abs())
                .fold(0.0, f64::max)
        };
        let order = (err(300) / err(600)).log2();
        assert!((order - 2.0).abs() < 0.2, "observed order {order}");
    }

    #[test]
    fn origin_derivative_is_zero() {
        let f = RadialField::from_fn(uniform(2.0, 40), |r| (1.0 + r * r).powi(-2), None);
        let d = derivative(&f).unwrap();
        assert_eq!(d.values()[0], 0.0);
    }
}
