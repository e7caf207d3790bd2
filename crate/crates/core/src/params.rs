use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Model constants shared by every experiment.
///
/// `q` is the limit value of the quotient, `ell` the Riesz kernel power. The
/// triple `(rho, l_decay, k_quot)` describes the admissible class: decay
/// `u <= L |x|^{2-n}` outside `B_rho` and quotient bounded by `K`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub n: usize,
    pub ell: f64,
    #[serde(rename = "Q")]
    pub q: f64,
    #[serde(default = "defaults::alpha")]
    pub alpha: f64,
    #[serde(default = "defaults::r_ball")]
    pub r_ball: f64,
    #[serde(default = "defaults::rho")]
    pub rho: f64,
    #[serde(rename = "L_decay", default = "defaults::l_decay")]
    pub l_decay: f64,
    #[serde(rename = "K_quot", default = "defaults::k_quot")]
    pub k_quot: f64,
    #[serde(default = "defaults::eta")]
    pub eta: f64,
    #[serde(default)]
    pub sigma: Option<f64>,
    #[serde(default)]
    pub delta: Option<f64>,
}

mod defaults {
    pub fn alpha() -> f64 {
        0.5
    }
    pub fn r_ball() -> f64 {
        1.0
    }
    pub fn rho() -> f64 {
        0.5
    }
    pub fn l_decay() -> f64 {
        1.0
    }
    pub fn k_quot() -> f64 {
        10.0
    }
    pub fn eta() -> f64 {
        0.5
    }
}

impl ModelParams {
    pub fn new(n: usize, ell: f64, q: f64) -> Self {
        Self {
            n,
            ell,
            q,
            alpha: defaults::alpha(),
            r_ball: defaults::r_ball(),
            rho: defaults::rho(),
            l_decay: defaults::l_decay(),
            k_quot: defaults::k_quot(),
            eta: defaults::eta(),
            sigma: None,
            delta: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(LabError::InvalidParams(msg));
        if !(3..=10).contains(&self.n) {
            return bad(format!("dimension n = {} must lie in 3..=10", self.n));
        }
        if !(self.ell > 0.0 && self.ell < self.n as f64) {
            return bad(format!("ell = {} must lie in (0, n)", self.ell));
        }
        if !(self.q > 0.0 && self.q.is_finite()) {
            return bad(format!("Q = {} must be positive", self.q));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha = {} must lie in (0, 1)", self.alpha));
        }
        for (name, v) in [
            ("r_ball", self.r_ball),
            ("rho", self.rho),
            ("L_decay", self.l_decay),
            ("K_quot", self.k_quot),
            ("eta", self.eta),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} = {v} must be positive"));
            }
        }
        if let Some(s) = self.sigma {
            if !(s > 0.0) {
                return bad(format!("sigma = {s} must be positive"));
            }
        }
        if let Some(d) = self.delta {
            if !(d >= 0.0) {
                return bad(format!("delta = {d} must be non-negative"));
            }
        }
        if self.rho >= self.r_ball {
            return bad(format!(
                "rho = {} must be smaller than r_ball = {}",
                self.rho, self.r_ball
            ));
        }
        Ok(())
    }

    pub fn dim(&self) -> f64 {
        self.n as f64
    }

    /// Nonlinearity exponent `(n+2)/(n-2)`.
    pub fn p_crit(&self) -> f64 {
        critical_exponent(self.n)
    }

    /// Density exponent `2n/(n-2)` inside the convolution.
    pub fn p_conv(&self) -> f64 {
        convolution_exponent(self.n)
    }

    /// Radius inside which the theorem's physical-ball deviation is measured.
    pub fn sigma_or_default(&self) -> f64 {
        self.sigma.unwrap_or(self.rho)
    }
}

pub fn critical_exponent(n: usize) -> f64 {
    let n = n as f64;
    (n + 2.0) / (n - 2.0)
}

pub fn convolution_exponent(n: usize) -> f64 {
    let n = n as f64;
    2.0 * n / (n - 2.0)
}
