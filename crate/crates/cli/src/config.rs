use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use bubble_core::harness::Perturbation;
use bubble_core::riesz::OracleConfig;
use bubble_core::solver::SolveOptions;
use bubble_core::{make_grid, GridScheme, ModelParams, RadialGrid};
use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    BubbleCheck,
    RieszCheck,
    Shoot,
    Manufacture,
    Solve,
    BlowupRate,
    Hypotheses,
    Energy,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Self::BubbleCheck => "bubble-check",
            Self::RieszCheck => "riesz-check",
            Self::Shoot => "shoot",
            Self::Manufacture => "manufacture",
            Self::Solve => "solve",
            Self::BlowupRate => "blowup-rate",
            Self::Hypotheses => "hypotheses",
            Self::Energy => "energy",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub r_max: f64,
    #[serde(rename = "N")]
    pub intervals: usize,
    #[serde(default = "uniform")]
    pub scheme: GridScheme,
}

fn uniform() -> GridScheme {
    GridScheme::Uniform
}

impl GridSpec {
    pub fn build(&self) -> Result<Arc<RadialGrid>, CliError> {
        make_grid(self.r_max, self.intervals, self.scheme)
            .map(Arc::new)
            .map_err(|e| CliError::Config(format!("grid: {e}")))
    }
}

/// Settings for `riesz-check`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RieszSettings {
    #[serde(default = "oracle_ells")]
    pub ell_list: Vec<f64>,
    #[serde(default = "scaling_ells")]
    pub scaling_ell_list: Vec<f64>,
    /// Radii at which the oracle is evaluated.
    #[serde(default = "oracle_targets")]
    pub targets: GridSpec,
    #[serde(default)]
    pub oracle: OracleConfig,
}

fn oracle_ells() -> Vec<f64> {
    vec![0.5, 1.0, 1.5]
}

fn scaling_ells() -> Vec<f64> {
    vec![0.5, 1.0]
}

fn oracle_targets() -> GridSpec {
    GridSpec {
        r_max: 4.0,
        intervals: 8,
        scheme: GridScheme::Uniform,
    }
}

impl Default for RieszSettings {
    fn default() -> Self {
        Self {
            ell_list: oracle_ells(),
            scaling_ell_list: scaling_ells(),
            targets: oracle_targets(),
            oracle: OracleConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShootSettings {
    #[serde(default = "one")]
    pub v0: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for ShootSettings {
    fn default() -> Self {
        Self { v0: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveSettings {
    /// The initial guess is `guess_scale · Z`.
    #[serde(default = "guess_scale")]
    pub guess_scale: f64,
    #[serde(default)]
    pub options: SolveOptions,
}

fn guess_scale() -> f64 {
    1.1
}

impl Default for SolveSettings {
    fn default() -> Self {
        Self {
            guess_scale: guess_scale(),
            options: SolveOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassSettings {
    /// Onset radius for the decay-constant probe of `Z`, independent of `params.rho`.
    #[serde(default = "decay_rho")]
    pub decay_rho: f64,
}

fn decay_rho() -> f64 {
    10.0
}

impl Default for ClassSettings {
    fn default() -> Self {
        Self { decay_rho: decay_rho() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<Experiment>,
    pub params: ModelParams,
    pub grid: GridSpec,
    #[serde(default)]
    pub eps_list: Vec<f64>,
    #[serde(default)]
    pub perturbation: Perturbation,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default)]
    pub riesz: RieszSettings,
    #[serde(default)]
    pub shoot: ShootSettings,
    #[serde(default)]
    pub solve: SolveSettings,
    #[serde(default)]
    pub class: ClassSettings,
    /// Directory for binary kernel tables; tables are rebuilt when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cache_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

/// Parsed config as untyped JSON with every `--set` applied, plus the typed view.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub raw: Value,
    pub config: Config,
}

pub fn load(path: &Path, sets: &[String]) -> Result<Loaded, CliError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let raw: Value = serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    from_value(raw, sets)
}

pub fn from_value(mut raw: Value, sets: &[String]) -> Result<Loaded, CliError> {
    for s in sets {
        apply_set(&mut raw, s)?;
    }
    let config: Config = serde_json::from_value(raw.clone()).map_err(|e| CliError::Config(e.to_string()))?;
    Ok(Loaded { raw, config })
}

/// `a.b.c=value`: `value` is read as JSON when it parses, else as a string.
/// Intermediate objects are created on demand.
pub fn apply_set(root: &mut Value, assignment: &str) -> Result<(), CliError> {
    let (path, text) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("--set expects key=value, got {assignment:?}")))?;
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(CliError::Config(format!("malformed key {path:?}")));
    }
    let value = serde_json::from_str(text).unwrap_or_else(|_| Value::String(text.to_string()));
    let mut node = root;
    for key in &keys[..keys.len() - 1] {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| CliError::Config(format!("{path:?}: {key:?} is not inside an object")))?;
        node = obj
            .entry(key.to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    let obj = node
        .as_object_mut()
        .ok_or_else(|| CliError::Config(format!("{path:?}: parent is not an object")))?;
    obj.insert(keys[keys.len() - 1].to_string(), value);
    Ok(())
}

/// FNV-1a over the canonical (sorted-key) JSON of the resolved config.
pub fn config_hash(raw: &Value) -> String {
    let text = serde_json::to_string(raw).expect("JSON values always serialize");
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in text.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    format!("{h:016x}")
}
