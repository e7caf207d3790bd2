//! Product integration of `q(r) = ∫_0^∞ W(r, s) f(s) s^{n-1} ds`.
//!
//! `f` is replaced by its local cubic interpolant on each panel, and every
//! Lagrange basis function is integrated against the kernel. Panels adjacent to the target radius use a
//! geometrically graded rule toward the diagonal. The origin row is exact:
//! there `W(0, s) = |S^{n-1}| s^{-ℓ}`.

use std::fs;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;

use super::kernel::{check_params, ring_kernel, Profile};
use crate::error::{LabError, Result};
use crate::field::{PowerTail, RadialField};
use crate::grid::RadialGrid;
use crate::quad::{dot, sphere_area, GaussLegendre};

const GRADING: f64 = 0.2;
const GRADED_POINTS: usize = 10;
const TAIL_POINTS: usize = 16;

/// Quadrature weights `T[i][j]` with `q(r_i) ≈ Σ_j T[i][j] f(s_j)` plus a tail term.
///
/// Rows are built independently and in parallel; once built the table is immutable
/// and can be reused for any density on the same grid.
#[derive(Debug, Clone)]
pub struct RingKernelTable {
    grid: Arc<RadialGrid>,
    n: usize,
    ell: f64,
    weights: Vec<f64>,
}

impl RingKernelTable {
    pub fn build(grid: Arc<RadialGrid>, n: usize, ell: f64) -> Result<Self> {
        check_params(n, ell)?;
        let len = grid.len();
        let profile = Profile::new(n, ell);
        let rows: Vec<Vec<f64>> = (0..len)
            .into_par_iter()
            .map(|i| row_weights(&grid, &profile, n, ell, i))
            .collect();
        Ok(Self {
            grid,
            n,
            ell,
            weights: rows.concat(),
        })
    }

    /// Table for the grid `factor · r`. The weights are homogeneous of degree
    /// `n - ℓ` in the radii, so no quadrature is repeated.
    pub fn rescaled(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(LabError::InvalidParams(format!(
                "scale factor {factor} must be positive"
            )));
        }
        let s = factor.powf(self.n as f64 - self.ell);
        Ok(Self {
            grid: Arc::new(self.grid.scaled(factor)),
            n: self.n,
            ell: self.ell,
            weights: self.weights.iter().map(|w| w * s).collect(),
        })
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn ell(&self) -> f64 {
        self.ell
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let len = self.grid.len();
        &self.weights[i * len..(i + 1) * len]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Ring-kernel value `W(r_i, r_j)` between two nodes.
    pub fn kernel(&self, i: usize, j: usize) -> Result<f64> {
        let x = self.grid.nodes();
        ring_kernel(x[i], x[j], self.n, self.ell)
    }

    pub fn apply(&self, f: &RadialField) -> Result<RadialField> {
        if !(Arc::ptr_eq(f.grid_arc(), &self.grid) || f.nodes() == self.grid.nodes()) {
            return Err(LabError::GridMismatch);
        }
        let corr = tail_correction(&self.grid, &Profile::new(self.n, self.ell), self.n, self.ell, f)?;
        let values: Vec<f64> = (0..self.grid.len())
            .into_par_iter()
            .map(|i| dot(self.row(i), f.values()) + corr[i])
            .collect();
        finish(f, values, self.n, self.ell)
    }

    /// Cache file name keyed by dimension, kernel power and grid fingerprint.
    pub fn cache_file_name(grid: &RadialGrid, n: usize, ell: f64) -> String {
        format!("ring_n{n}_l{:016x}_g{:016x}.bin", ell.to_bits(), grid.fingerprint())
    }

    /// Binary layout, little endian: magic `RKTB`, `u32` version, `u32` n, `f64` ell,
    /// `u64` node count, then the row-major weights.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(fs::File::create(path)?);
        w.write_all(MAGIC)?;
        w.write_all(&CACHE_VERSION.to_le_bytes())?;
        w.write_all(&(self.n as u32).to_le_bytes())?;
        w.write_all(&self.ell.to_le_bytes())?;
        w.write_all(&(self.grid.len() as u64).to_le_bytes())?;
        for x in &self.weights {
            w.write_all(&x.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path, grid: Arc<RadialGrid>, n: usize, ell: f64) -> Result<Self> {
        let mut r = BufReader::new(fs::File::open(path)?);
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(LabError::Cache(format!("{}: bad magic", path.display())));
        }
        let version = read_u32(&mut r)?;
        if version != CACHE_VERSION {
            return Err(LabError::Cache(format!("unsupported version {version}")));
        }
        let file_n = read_u32(&mut r)? as usize;
        let file_ell = f64::from_le_bytes(read_array(&mut r)?);
        let len = u64::from_le_bytes(read_array(&mut r)?) as usize;
        if file_n != n || file_ell.to_bits() != ell.to_bits() || len != grid.len() {
            return Err(LabError::Cache(format!(
                "header (n={file_n}, ell={file_ell}, nodes={len}) does not match (n={n}, ell={ell}, nodes={})",
                grid.len()
            )));
        }
        let mut bytes = Vec::with_capacity(len * len * 8);
        r.read_to_end(&mut bytes)?;
        if bytes.len() != len * len * 8 {
            return Err(LabError::Cache(format!(
                "expected {} payload bytes, found {}",
                len * len * 8,
                bytes.len()
            )));
        }
        let weights = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(Self { grid, n, ell, weights })
    }

    /// Loads the table from `dir` when a matching file exists, otherwise builds and
    /// stores it. Unreadable or mismatched files are rebuilt.
    pub fn load_or_build(dir: &Path, grid: Arc<RadialGrid>, n: usize, ell: f64) -> Result<Self> {
        let path: PathBuf = dir.join(Self::cache_file_name(&grid, n, ell));
        if path.exists() {
            if let Ok(t) = Self::load(&path, grid.clone(), n, ell) {
                return Ok(t);
            }
        }
        let table = Self::build(grid, n, ell)?;
        fs::create_dir_all(dir)?;
        table.save(&path)?;
        Ok(table)
    }
}

const MAGIC: &[u8; 4] = b"RKTB";
const CACHE_VERSION: u32 = 1;

fn read_array<R: Read, const K: usize>(r: &mut R) -> Result<[u8; K]> {
    let mut b = [0u8; K];
    r.read_exact(&mut b)?;
    Ok(b)
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    Ok(u32::from_le_bytes(read_array(r)?))
}

/// Matrix-free convolution; use [`RingKernelTable`] when the same grid is reused.
pub fn riesz_convolve(f: &RadialField, n: usize, ell: f64) -> Result<RadialField> {
    check_params(n, ell)?;
    let grid = f.grid_arc().clone();
    let profile = Profile::new(n, ell);
    let corr = tail_correction(&grid, &profile, n, ell, f)?;
    let values: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|i| dot(&row_weights(&grid, &profile, n, ell, i), f.values()) + corr[i])
        .collect();
    finish(f, values, n, ell)
}

/// Convolution evaluated only at the listed node indices.
pub fn riesz_convolve_at(f: &RadialField, n: usize, ell: f64, nodes: &[usize]) -> Result<Vec<f64>> {
    check_params(n, ell)?;
    let grid = f.grid_arc().clone();
    if let Some(&bad) = nodes.iter().find(|&&i| i >= grid.len()) {
        return Err(LabError::InvalidParams(format!("node index {bad} out of range")));
    }
    let profile = Profile::new(n, ell);
    let corr = tail_correction(&grid, &profile, n, ell, f)?;
    Ok(nodes
        .par_iter()
        .map(|&i| dot(&row_weights(&grid, &profile, n, ell, i), f.values()) + corr[i])
        .collect())
}

fn check_density(f: &RadialField, n: usize, ell: f64) -> Result<()> {
    if let Some(v) = f.values().iter().find(|v| !(**v >= 0.0)) {
        return Err(LabError::NonPositive(format!("convolution density has sample {v}")));
    }
    if let Some(t) = f.tail() {
        let required = n as f64 - ell;
        if t.power <= required {
            return Err(LabError::DivergentTail {
                power: t.power,
                required,
            });
        }
    }
    Ok(())
}

/// `q(r) ≈ m_f r^{-ℓ}` when `f` has finite mass; slower tails get a fitted power.
fn finish(f: &RadialField, values: Vec<f64>, n: usize, ell: f64) -> Result<RadialField> {
    let q = RadialField::new(f.grid_arc().clone(), values, None)?;
    let tail = match f.radial_integral(n) {
        Ok(m) if m > 0.0 => Some(PowerTail::new(m, ell)?),
        Ok(_) => None,
        Err(_) => q.fitted_tail(),
    };
    Ok(q.with_tail(tail))
}

/// Contribution of `A s^{-β}` beyond `R` with the exact kernel:
/// `A r^{n-ℓ-β} ∫_0^{r/R} w(t) t^{β+ℓ-n-1} dt`, where the constant part of `w`
/// is integrated in closed form.
fn tail_correction(grid: &RadialGrid, profile: &Profile, n: usize, ell: f64, f: &RadialField) -> Result<Vec<f64>> {
    check_density(f, n, ell)?;
    let len = grid.len();
    let Some(t) = f.tail() else {
        return Ok(vec![0.0; len]);
    };
    let big_r = grid.r_max();
    let excess = t.power + ell - n as f64;
    let s0 = sphere_area(n);
    let lead = s0 * t.coeff * big_r.powf(-excess) / excess;
    let gl = GaussLegendre::cached(TAIL_POINTS);
    Ok(grid
        .nodes()
        .par_iter()
        .map(|&r| {
            if r == 0.0 {
                return lead;
            }
            let tau = r / big_r;
            let rest: f64 = gl
                .mapped(0.0, tau)
                .map(|(x, w)| w * x.powf(excess - 1.0) * (profile.eval_gap(1.0 - x) - s0))
                .sum();
            lead + t.coeff * r.powf(-excess) * rest
        })
        .collect())
}

fn row_weights(grid: &RadialGrid, profile: &Profile, n: usize, ell: f64, i: usize) -> Vec<f64> {
    let x = grid.nodes();
    let len = x.len();
    let m = len.min(4);
    let mut w = vec![0.0; len];
    let s0 = sphere_area(n);
    let nm1 = n as i32 - 1;
    let r = x[i];
    let levels = graded_levels(n, ell);
    let graded = GaussLegendre::cached(GRADED_POINTS);
    for k in 0..len - 1 {
        let (a, b) = (x[k], x[k + 1]);
        let h = b - a;
        // Same local cubic as `RadialField::eval`.
        let st = k.saturating_sub(1).min(len - m);
        let xs = &x[st..st + m];
        let mut acc = [0.0; 4];
        let mut add = |s: f64, g: f64| {
            let basis = lagrange(xs, s);
            for j in 0..m {
                acc[j] += g * basis[j];
            }
        };
        if i == 0 {
            let gamma = n as f64 - 1.0 - ell;
            if k == 0 {
                acc = origin_moments(xs, b, gamma);
            } else {
                for (s, gw) in GaussLegendre::cached(8).mapped(a, b) {
                    add(s, gw * s.powf(gamma));
                }
            }
            for j in 0..m {
                w[st + j] += s0 * acc[j];
            }
            continue;
        }
        if k + 1 == i || k == i {
            // Offsets from the diagonal: [h σ^{j+1}, h σ^j] for each level, then [0, h σ^L].
            let toward_a = k == i;
            let mut hi = h;
            for level in 0..=levels {
                let lo = if level == levels { 0.0 } else { hi * GRADING };
                for (off, gw) in graded.mapped(lo, hi) {
                    let s = if toward_a { r + off } else { r - off };
                    let big = r.max(s);
                    add(s, gw * profile.kernel_gap(big, off) * s.powi(nm1));
                }
                hi = lo;
            }
        } else {
            let dist = if b <= r { r - b } else { a - r };
            let order = match dist / h {
                q if q < 2.0 => 12,
                q if q < 5.0 => 8,
                q if q < 15.0 => 6,
                _ => 4,
            };
            for (s, gw) in GaussLegendre::cached(order).mapped(a, b) {
                add(s, gw * profile.kernel(r, s) * s.powi(nm1));
            }
        }
        for j in 0..m {
            w[st + j] += acc[j];
        }
    }
    w
}

fn lagrange(xs: &[f64], s: f64) -> [f64; 4] {
    let mut out = [0.0; 4];
    for j in 0..xs.len() {
        let mut l = 1.0;
        for k in 0..xs.len() {
            if k != j {
                l *= (s - xs[k]) / (xs[j] - xs[k]);
            }
        }
        out[j] = l;
    }
    out
}

/// `∫_0^b s^γ L_j(s) ds` exactly, expanding each Lagrange basis polynomial in
/// monomials of `u = s / b`.
fn origin_moments(xs: &[f64], b: f64, gamma: f64) -> [f64; 4] {
    let u: Vec<f64> = xs.iter().map(|x| x / b).collect();
    let mut out = [0.0; 4];
    for j in 0..u.len() {
        let mut coeffs = vec![1.0];
        let mut denom = 1.0;
        for k in 0..u.len() {
            if k == j {
                continue;
            }
            denom *= u[j] - u[k];
            let mut next = vec![0.0; coeffs.len() + 1];
            for (p, c) in coeffs.iter().enumerate() {
                next[p + 1] += c;
                next[p] -= c * u[k];
            }
            coeffs = next;
        }
        let integral: f64 = coeffs
            .iter()
            .enumerate()
            .map(|(p, c)| c / (gamma + p as f64 + 1.0))
            .sum();
        out[j] = b.powf(gamma + 1.0) * integral / denom;
    }
    out
}

/// Enough levels that the unresolved piece `[0, h σ^L]` is below rounding for the
/// weakest admissible diagonal singularity `|r - s|^{n-1-ℓ}`.
fn graded_levels(n: usize, ell: f64) -> usize {
    let kappa = (n as f64 - 1.0 - ell).min(2.0);
    let need = 36.8 / ((kappa + 1.0) * -GRADING.ln());
    (need.ceil() as usize).clamp(3, 60)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_grid, GridScheme};
    use std::f64::consts::PI;

    fn bubble_density_3d(points: usize, r_max: f64) -> RadialField {
        let g = Arc::new(make_grid(r_max, points, GridScheme::Uniform).unwrap());
        RadialField::from_fn(g, |r| (1.0 + r * r).powi(-3), Some(PowerTail::new(1.0, 6.0).unwrap()))
    }

    /// `q_Z(r) = (π/2)(1/(1+r²) + atan(r)/r)` for `n = 3, ℓ = 1, Q = 3`.
    fn q_exact(r: f64) -> f64 {
        if r == 0.0 {
            PI
        } else {
            0.5 * PI * (1.0 / (1.0 + r * r) + r.atan() / r)
        }
    }

    #[test]
    fn origin_value_three_dimensions() {
        let f = bubble_density_3d(800, 20.0);
        let q = riesz_convolve_at(&f, 3, 1.0, &[0]).unwrap();
        assert!((q[0] - PI).abs() < 1e-6, "{}", q[0]);
    }

    #[test]
    fn closed_form_profile() {
        let f = bubble_density_3d(800, 20.0);
        let q = riesz_convolve(&f, 3, 1.0).unwrap();
        for (r, v) in q.nodes().iter().zip(q.values()) {
            assert!((v - q_exact(*r)).abs() < 1e-5, "r={r}: {v} vs {}", q_exact(*r));
        }
    }

    #[test]
    fn table_matches_matrix_free() {
        let g = Arc::new(make_grid(5.0, 60, GridScheme::Geometric { ratio: 1.03 }).unwrap());
        let f = RadialField::from_fn(g.clone(), |r| (-r * r).exp(), None);
        let table = RingKernelTable::build(g, 6, 1.0).unwrap();
        let a = table.apply(&f).unwrap();
        let b = riesz_convolve(&f, 6, 1.0).unwrap();
        assert_eq!(a.values(), b.values());
        let (col, row) = (table.kernel(0, 5).unwrap(), table.kernel(5, 0).unwrap());
        assert_eq!(col, row);
    }

    #[test]
    fn zero_density() {
        let g = Arc::new(make_grid(5.0, 40, GridScheme::Uniform).unwrap());
        let q = riesz_convolve(&RadialField::constant(g, 0.0), 4, 1.5).unwrap();
        assert!(q.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn divergent_tail() {
        let g = Arc::new(make_grid(5.0, 40, GridScheme::Uniform).unwrap());
        let f = RadialField::constant(g, 1.0).with_tail(Some(PowerTail::new(1.0, 4.0).unwrap()));
        assert!(matches!(
            riesz_convolve(&f, 6, 1.0),
            Err(LabError::DivergentTail { .. })
        ));
    }

    #[test]
    fn strongly_singular_diagonal() {
        let ell = 2.5;
        let g = Arc::new(make_grid(2.0, 200, GridScheme::Uniform).unwrap());
        let f = RadialField::from_fn(g, |r| (-(r * r)).exp(), None);
        let q = riesz_convolve(&f, 3, ell).unwrap();
        assert!(q.values().iter().all(|v| v.is_finite() && *v > 0.0));
        let fine = Arc::new(make_grid(2.0, 400, GridScheme::Uniform).unwrap());
        let qf = riesz_convolve(&RadialField::from_fn(fine, |r| (-(r * r)).exp(), None), 3, ell).unwrap();
        for (i, v) in q.values().iter().enumerate() {
            let vf = qf.values()[2 * i];
            assert!((v - vf).abs() / vf < 1e-3, "node {i}: {v} vs {vf}");
        }
    }

    #[test]
    fn cache_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let g = Arc::new(make_grid(3.0, 30, GridScheme::Uniform).unwrap());
        let built = RingKernelTable::load_or_build(dir.path(), g.clone(), 5, 1.5).unwrap();
        let loaded = RingKernelTable::load_or_build(dir.path(), g.clone(), 5, 1.5).unwrap();
        assert_eq!(built.weights(), loaded.weights());
        let path = dir.path().join(RingKernelTable::cache_file_name(&g, 5, 1.5));
        assert!(matches!(
            RingKernelTable::load(&path, g.clone(), 5, 2.0),
            Err(LabError::Cache(_))
        ));
        fs::write(&path, b"garbage").unwrap();
        assert!(RingKernelTable::load(&path, g.clone(), 5, 1.5).is_err());
        let rebuilt = RingKernelTable::load_or_build(dir.path(), g, 5, 1.5).unwrap();
        assert_eq!(rebuilt.weights(), built.weights());
    }
}
