//! JSON run configurations for each subcommand.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Deserialize;

use mrokit::risk::PopulationMode;
use mrokit::scenarios::{BanditSpec, Method, Metric, ScenarioSpec, SweepPlan};
use mrokit::solver::{Mode, DEFAULT_ROUNDS};
use mrokit::{FunctionClass, LossSpec, ScalingRule, WeightFamily};

use crate::error::CliError;

fn default_rounds() -> usize {
    DEFAULT_ROUNDS
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleKind {
    /// Per-column sufficient statistics.
    #[default]
    Precomputed,
    /// Recomputes every weighted ERM from the samples.
    Direct,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveConfig {
    pub objective: Mode,
    #[serde(default = "no_scaling")]
    pub scaling: ScalingRule,
    #[serde(rename = "T", default = "default_rounds")]
    pub rounds: usize,
    #[serde(default)]
    pub eta: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub oracle: OracleKind,
    pub loss: LossSpec,
    pub class: FunctionClass,
    pub family: WeightFamily,
    /// Rescale weight columns to empirical mean one before solving.
    #[serde(default)]
    pub renormalize: bool,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

fn no_scaling() -> ScalingRule {
    ScalingRule::None
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatesConfig {
    pub scenario: ScenarioSpec,
    pub method: Method,
    pub metric: Metric,
    pub n_grid: Vec<usize>,
    pub replicates: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(rename = "T", default = "default_rounds")]
    pub rounds: usize,
    #[serde(default)]
    pub eta: Option<f64>,
    #[serde(default)]
    pub population: Option<PopulationMode>,
    /// Interval the fitted slope is expected to fall in; echoed, not enforced.
    #[serde(default)]
    pub target_interval: Option<[f64; 2]>,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

impl RatesConfig {
    pub fn plan(&self, seed: u64) -> SweepPlan {
        SweepPlan {
            method: self.method.clone(),
            metric: self.metric.clone(),
            n_grid: self.n_grid.clone(),
            replicates: self.replicates,
            seed,
            rounds: self.rounds,
            eta: self.eta,
            population: self.population,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BanditConfig {
    pub scenario: BanditSpec,
    pub n: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(rename = "T", default = "default_rounds")]
    pub rounds: usize,
    #[serde(default)]
    pub eta: Option<f64>,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

pub fn load<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Creates `dir` and checks that files can be written inside it.
pub fn ensure_writable(dir: &Path, files: &[&str]) -> Result<(), CliError> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::Config(format!("cannot create output directory {}: {e}", dir.display())))?;
    for name in files {
        let path = dir.join(name);
        if path.is_dir() {
            return Err(CliError::Config(format!(
                "output path {} is a directory",
                path.display()
            )));
        }
        if path.exists() && fs::metadata(&path).map(|m| m.permissions().readonly()).unwrap_or(true) {
            return Err(CliError::Config(format!(
                "output path {} is not writable",
                path.display()
            )));
        }
    }
    let probe = dir.join(".mrokit-write-probe");
    fs::write(&probe, b"")
        .and_then(|_| fs::remove_file(&probe))
        .map_err(|e| CliError::Config(format!("output directory {} is not writable: {e}", dir.display())))
}
