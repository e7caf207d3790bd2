//! Riesz potential `|x|^{-ℓ} * f` of radial densities.

mod convolve;
mod kernel;
mod oracle;
mod quotient;

pub use convolve::{riesz_convolve, riesz_convolve_at, RingKernelTable};
pub use kernel::ring_kernel;
pub use oracle::{relative_sup_error, riesz_oracle, OracleConfig};
pub use quotient::{quotient_field, quotient_field_with, Quotient, QuotientSummary};
