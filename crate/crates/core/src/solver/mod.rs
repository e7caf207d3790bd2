//! Shooting for the limit profile and a fixed-point solver for the nonlocal problem.

mod nonlocal;
mod shoot;

pub use nonlocal::{
    manufacture_potential, manufacture_potential_with, solve_nonlocal, solve_nonlocal_with, SolveOptions, SolveReport,
};
pub use shoot::{shoot_limit_profile, ShootOutcome, ShootResult};
