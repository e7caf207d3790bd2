use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::diff::{fornberg, laplacian_radial, stencils};
use crate::error::{LabError, Result};
use crate::field::{PowerTail, RadialField};
use crate::grid::RadialGrid;
use crate::params::ModelParams;
use crate::quad::compensated_sum;
use crate::riesz::{quotient_field_with, RingKernelTable};

/// `V = (Δu + q_u u^p) / u`, the potential for which `u` solves the equation.
pub fn manufacture_potential(u: &RadialField, params: &ModelParams) -> Result<RadialField> {
    params.validate()?;
    let table = RingKernelTable::build(u.grid_arc().clone(), params.n, params.ell)?;
    manufacture_potential_with(&table, u, params)
}

pub fn manufacture_potential_with(
    table: &RingKernelTable,
    u: &RadialField,
    params: &ModelParams,
) -> Result<RadialField> {
    if let Some(v) = u.values().iter().find(|v| !(**v > 0.0)) {
        return Err(LabError::NonPositive(format!(
            "manufactured solutions need u > 0, found {v}"
        )));
    }
    let q = quotient_field_with(table, u, params)?;
    let lap = laplacian_radial(u, params.n)?;
    let p = params.p_crit();
    let values = u
        .values()
        .iter()
        .zip(lap.values())
        .zip(q.field.values())
        .map(|((u, l), q)| (l + q * u.powf(p)) / u)
        .collect();
    RadialField::new(u.grid_arc().clone(), values, None)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Initial relaxation `τ ∈ (0, 1]`, halved whenever the update grows.
    pub tau: f64,
    /// Rescale each linear solve by `M^γ` with
    /// `M = ⟨u, (−Δ + V) u⟩ / ⟨u, q_u u^p⟩`, `γ = d/(d−1)` and `d` the degree of
    /// the nonlinearity. Fixed points are unchanged; without it the amplitude
    /// direction is amplified by `d > 1` on every sweep.
    pub stabilize: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 100,
            tau: 0.5,
            stabilize: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub solution: RadialField,
    pub iterations: usize,
    pub final_update_norm: f64,
    pub converged: bool,
    pub update_history: Vec<f64>,
    pub final_tau: f64,
}

/// Best-effort fixed-point iteration for `Δu - V u + q_u u^p = 0`.
///
/// Each sweep solves `(Δ - V) ũ = -q_k u_k^p` with the decay condition
/// `ũ'(R) = ((2-n)/R) ũ(R)` and relaxes `u ← (1-τ) u + τ ũ`. Convergence is not
/// guaranteed; failures are reported as errors.
pub fn solve_nonlocal(
    v: &RadialField,
    params: &ModelParams,
    guess: &RadialField,
    tol: f64,
    max_iter: usize,
) -> Result<SolveReport> {
    params.validate()?;
    let table = RingKernelTable::build(guess.grid_arc().clone(), params.n, params.ell)?;
    let opts = SolveOptions {
        tol,
        max_iter,
        ..SolveOptions::default()
    };
    solve_nonlocal_with(&table, v, params, guess, &opts)
}

pub fn solve_nonlocal_with(
    table: &RingKernelTable,
    v: &RadialField,
    params: &ModelParams,
    guess: &RadialField,
    opts: &SolveOptions,
) -> Result<SolveReport> {
    guess.ensure_same_grid(v)?;
    if !(opts.tau > 0.0 && opts.tau <= 1.0) {
        return Err(LabError::InvalidParams(format!(
            "relaxation {} not in (0, 1]",
            opts.tau
        )));
    }
    if guess.values().iter().any(|x| !(*x > 0.0)) {
        return Err(LabError::NonPositivityDetected { iteration: 0 });
    }
    if v.values().iter().any(|x| !x.is_finite()) {
        return Err(LabError::InvalidParams("potential has non-finite samples".into()));
    }
    if opts.max_iter == 0 {
        return Err(LabError::NonConvergence {
            iterations: 0,
            update_norm: f64::INFINITY,
        });
    }
    let grid = guess.grid_arc().clone();
    let n = params.n;
    let p = params.p_crit();
    let degree = p + params.p_conv();
    let gamma = degree / (degree - 1.0);
    let system = LinearSystem::new(&grid, n, v.values())?;
    let weights = grid.volume_weights(n);
    let big_r = grid.r_max();

    let with_tail = |values: Vec<f64>| -> Result<RadialField> {
        let last = *values.last().unwrap();
        let tail = PowerTail::new(last * big_r.powf(n as f64 - 2.0), n as f64 - 2.0)?;
        RadialField::new(grid.clone(), values, Some(tail))
    };
    let mut u = with_tail(guess.values().to_vec())?;
    let mut tau = opts.tau;
    let mut history = Vec::new();
    let mut prev = f64::INFINITY;
    for it in 1..=opts.max_iter {
        let q = quotient_field_with(table, &u, params)?;
        let rhs: Vec<f64> = u
            .values()
            .iter()
            .zip(q.field.values())
            .map(|(u, q)| q * u.powf(p))
            .collect();
        let mut next = system.solve(&rhs)?;
        if opts.stabilize {
            let lu = system.apply_operator(u.values());
            let num = compensated_sum(weights.iter().zip(u.values()).zip(&lu).map(|((w, u), l)| w * u * l));
            let den = compensated_sum(weights.iter().zip(u.values()).zip(&rhs).map(|((w, u), r)| w * u * r));
            let m = num / den;
            if m.is_finite() && m > 0.0 {
                let s = m.powf(gamma);
                next.iter_mut().for_each(|x| *x *= s);
            }
        }
        let mut update = 0.0f64;
        let mut sup = 0.0f64;
        let relaxed: Vec<f64> = u
            .values()
            .iter()
            .zip(&next)
            .map(|(old, new)| {
                let x = (1.0 - tau) * old + tau * new;
                update = update.max((x - old).abs());
                sup = sup.max(old.abs());
                x
            })
            .collect();
        if relaxed.iter().any(|x| !(*x > 0.0)) {
            return Err(LabError::NonPositivityDetected { iteration: it });
        }
        let norm = update / sup;
        history.push(norm);
        u = with_tail(relaxed)?;
        if norm <= opts.tol {
            return Ok(SolveReport {
                solution: u,
                iterations: it,
                final_update_norm: norm,
                converged: true,
                update_history: history,
                final_tau: tau,
            });
        }
        if norm > prev {
            tau *= 0.5;
        }
        prev = norm;
    }
    Err(LabError::NonConvergence {
        iterations: opts.max_iter,
        update_norm: prev,
    })
}

/// Discrete `(Δ - V)` with the Robin row at `r_max`, stored as a tridiagonal
/// system after eliminating the two out-of-band entries.
struct LinearSystem {
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
    /// Row operations applied to the right-hand side: `b₀ -= f₀ b₁`, `b_N -= f_N b_{N-1}`.
    first_factor: f64,
    last_factor: f64,
    /// Unreduced operator rows for `(−Δ + V) u`, same stencils as `laplacian_radial`.
    n: usize,
    v: Vec<f64>,
    grid: Arc<RadialGrid>,
}

impl LinearSystem {
    fn new(grid: &Arc<RadialGrid>, n: usize, v: &[f64]) -> Result<Self> {
        let x = grid.nodes();
        let len = x.len();
        if len < 4 {
            return Err(LabError::InvalidGrid("the solver needs at least 4 nodes".into()));
        }
        let st = stencils(grid)?;
        let nf = n as f64;
        let (mut lower, mut diag, mut upper) = (vec![0.0; len], vec![0.0; len], vec![0.0; len]);
        // Origin row spans nodes 0, 1, 2.
        let s0 = &st[0];
        let mut row0 = [nf * s0.d2[0] - v[0], nf * s0.d2[1], nf * s0.d2[2]];
        for i in 1..len - 1 {
            let s = &st[i];
            let r = x[i];
            lower[i] = s.d2[0] + (nf - 1.0) / r * s.d1[0];
            diag[i] = s.d2[1] + (nf - 1.0) / r * s.d1[1] - v[i];
            upper[i] = s.d2[2] + (nf - 1.0) / r * s.d1[2];
        }
        // Robin row from a three-point one-sided derivative.
        let r_max = x[len - 1];
        let w = fornberg(r_max, &x[len - 3..], 1);
        let mut row_n = [w[1][0], w[1][1], w[1][2] - (2.0 - nf) / r_max];
        let first_factor = if upper[1] != 0.0 { row0[2] / upper[1] } else { 0.0 };
        if first_factor != 0.0 {
            row0[0] -= first_factor * lower[1];
            row0[1] -= first_factor * diag[1];
            row0[2] = 0.0;
        }
        let last_factor = if lower[len - 2] != 0.0 {
            row_n[0] / lower[len - 2]
        } else {
            0.0
        };
        if last_factor != 0.0 {
            row_n[1] -= last_factor * diag[len - 2];
            row_n[2] -= last_factor * upper[len - 2];
            row_n[0] = 0.0;
        }
        diag[0] = row0[0];
        upper[0] = row0[1];
        lower[len - 1] = row_n[1];
        diag[len - 1] = row_n[2];
        Ok(Self {
            lower,
            diag,
            upper,
            first_factor,
            last_factor,
            n,
            v: v.to_vec(),
            grid: grid.clone(),
        })
    }

    /// Solves `(Δ - V) ũ = -b` with the Robin condition.
    fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let len = b.len();
        let mut d: Vec<f64> = b.iter().map(|x| -x).collect();
        // The Robin row has zero right-hand side before elimination.
        d[len - 1] = 0.0;
        d[0] -= self.first_factor * d[1];
        d[len - 1] -= self.last_factor * d[len - 2];
        let mut c = vec![0.0; len];
        let mut beta = self.diag[0];
        if beta == 0.0 || !beta.is_finite() {
            return Err(LabError::LinearSolveFailure { row: 0 });
        }
        c[0] = self.upper[0] / beta;
        d[0] /= beta;
        for i in 1..len {
            beta = self.diag[i] - self.lower[i] * c[i - 1];
            if beta == 0.0 || !beta.is_finite() {
                return Err(LabError::LinearSolveFailure { row: i });
            }
            if i + 1 < len {
                c[i] = self.upper[i] / beta;
            }
            d[i] = (d[i] - self.lower[i] * d[i - 1]) / beta;
        }
        for i in (0..len - 1).rev() {
            d[i] -= c[i] * d[i + 1];
        }
        Ok(d)
    }

    /// `(−Δ + V) u` with the interior stencils of `laplacian_radial`.
    fn apply_operator(&self, u: &[f64]) -> Vec<f64> {
        let f = RadialField::new(self.grid.clone(), u.to_vec(), None).expect("length checked");
        let lap = laplacian_radial(&f, self.n).expect("grid checked");
        lap.values()
            .iter()
            .zip(u)
            .zip(&self.v)
            .map(|((l, u), v)| -l + v * u)
            .collect()
    }
}
