//! Blow-up analysis: rescaling to the unit sup, deviation from the bubble,
//! linearization diagnostics, class hypotheses, the energy identity, and the
//! manufactured ε-families that tie them together.

mod energy;
mod experiment;
mod hypothesis;
mod linearized;
mod rescale;

pub use energy::{energy_identity_gap, energy_identity_gap_with, EnergyBalance};
pub use experiment::{blowup_rate_experiment, BlowupExperiment, BlowupRecord, Perturbation};
pub use hypothesis::{hypothesis_product, hypothesis_product_with, hypothesis_product_with_quotient, Hypothesis};
pub use linearized::{a_coefficient, LinearizedDiagnostics, TAYLOR_THRESHOLD};
pub use rescale::{c2_deviation, deviation_from_bubble, normalize_blowup, rescaled_residual, Normalized};
