use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Least-squares line through `(ln x, ln y)`: `y ≈ exp(log_coeff) · x^slope`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub log_coeff: f64,
    /// Largest absolute residual in log space.
    pub max_residual: f64,
    pub n_points: usize,
}

impl RateFit {
    pub fn coeff(&self) -> f64 {
        self.log_coeff.exp()
    }
}

pub fn powerlaw_fit(points: &[(f64, f64)]) -> Result<RateFit> {
    if points.len() < 2 {
        return Err(LabError::InsufficientData {
            needed: 2,
            got: points.len(),
        });
    }
    if let Some(&(x, y)) = points.iter().find(|(x, y)| !(*x > 0.0 && *y > 0.0)) {
        return Err(LabError::NonPositive(format!(
            "power-law fit needs positive data, got ({x}, {y})"
        )));
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let m = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / m;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(LabError::InsufficientData { needed: 2, got: 1 });
    }
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let log_coeff = my - slope * mx;
    let max_residual = logs
        .iter()
        .map(|&(lx, ly)| (ly - log_coeff - slope * lx).abs())
        .fold(0.0, f64::max);
    Ok(RateFit {
        slope,
        log_coeff,
        max_residual,
        n_points: points.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_quadratic() {
        let pts: Vec<_> = [0.2, 0.1, 0.05].iter().map(|&e| (e, 3.0 * e * e)).collect();
        let fit = powerlaw_fit(&pts).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-12);
        assert!((fit.coeff() - 3.0).abs() < 1e-12);
        assert!(fit.max_residual < 1e-12);
        assert_eq!(fit.n_points, 3);
    }

    #[test]
    fn asymptotic_slope() {
        let pts: Vec<_> = (0..=90)
            .map(|k| 10.0 + k as f64)
            .map(|r| (r, (1.0 + r).powi(-4)))
            .collect();
        let fit = powerlaw_fit(&pts).unwrap();
        assert!(fit.slope > -4.2 && fit.slope < -3.8, "{}", fit.slope);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            powerlaw_fit(&[(1.0, 1.0)]),
            Err(LabError::InsufficientData { .. })
        ));
        assert!(matches!(
            powerlaw_fit(&[(1.0, 1.0), (2.0, 0.0)]),
            Err(LabError::NonPositive(_))
        ));
        assert!(powerlaw_fit(&[(1.0, 1.0), (1.0, 2.0)]).is_err());
    }
}
