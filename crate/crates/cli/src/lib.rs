//! Configuration-driven experiments over `bubble-core`.
//!
//! A run resolves the JSON config (with `--set` overrides), validates it,
//! executes one experiment and writes `report.json` plus plot-ready CSV files.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod emit;
pub mod error;
pub mod experiments;
pub mod report;

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

pub use config::{Config, Experiment, Loaded};
pub use error::CliError;
pub use report::{Check, Report};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: Report,
    pub files: Vec<PathBuf>,
    pub out_dir: PathBuf,
}

#[derive(Debug, Serialize)]
struct Timings {
    experiment: &'static str,
    wall_seconds: f64,
}

pub fn default_out_dir(exp: Experiment) -> PathBuf {
    Path::new("results").join(exp.name())
}

/// Validates, runs and emits. Failing checks are not errors: they show up in
/// `report.passed`.
pub fn run(exp: Experiment, loaded: &Loaded, out: Option<&Path>) -> Result<RunOutput, CliError> {
    let cfg = &loaded.config;
    experiments::validate(exp, cfg)?;
    let tolerances = experiments::resolve_tolerances(exp, &cfg.tolerances)?;
    let echo = serde_json::to_value(cfg).expect("config serializes");
    let start = Instant::now();
    let ctx = experiments::Context { cfg, tol: &tolerances };
    let outcome = experiments::dispatch(exp, &ctx)?;
    let wall_seconds = start.elapsed().as_secs_f64();
    let passed = outcome.checks.iter().all(|c| c.passed);
    let report = Report {
        tool: "bubble-lab",
        version: VERSION,
        experiment: exp.name(),
        config_hash: config::config_hash(&echo),
        config: echo,
        tolerances,
        checks: outcome.checks,
        results: outcome.results,
        passed,
    };
    let out_dir = out
        .map(Path::to_path_buf)
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| default_out_dir(exp));
    let timings = Timings {
        experiment: exp.name(),
        wall_seconds,
    };
    let files = emit::emit(&out_dir, &report, &outcome.curves, outcome.rates.as_deref(), &timings)?;
    Ok(RunOutput { report, files, out_dir })
}
