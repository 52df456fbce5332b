//! Synthetic scenarios with known population risks, and the rate-sweep
//! experiment driver.
//!
//! Every scenario encodes its target distributions `P_w` as importance
//! weights over a single training distribution `P_0`, samples datasets from
//! `P_0`, and evaluates population risks either in closed form or by Monte
//! Carlo through [`PopulationModel`].

pub mod bandit;
pub mod dro_slow;
pub mod example2;
pub mod linreg;
pub mod prop1;
pub mod rates;

use serde::{Deserialize, Serialize};

use crate::class::FunctionClass;
use crate::data::{Dataset, WeightFamily};
use crate::error::Result;
use crate::loss::LossSpec;
use crate::risk::{PopulationMode, PopulationModel};

pub use bandit::{BanditScenario, BanditSpec, PolicySpec};
pub use dro_slow::DroSlow;
pub use example2::{matrix_instance, Example2};
pub use linreg::LinregCovshift;
pub use prop1::Prop1;
pub use rates::{fit_slope, rate_sweep, Method, Metric, RateSweepResult, ReplicateRecord, SweepFailure, SweepPlan};

/// Everything needed to run one solve.
#[derive(Debug, Clone)]
pub struct Instance {
    pub dataset: Dataset,
    pub family: WeightFamily,
    pub class: FunctionClass,
    pub loss: LossSpec,
}

/// A data-generating process that can be sampled at any size.
pub trait Scenario: PopulationModel + Send {
    fn name(&self) -> &'static str;

    /// A dataset of `n` draws from `P_0` with its weight family and class.
    fn build(&self, n: usize, seed: u64) -> Result<Instance>;

    /// How population risks are evaluated when no mode is requested.
    fn default_population_mode(&self) -> PopulationMode {
        PopulationMode::Exact
    }
}

/// Scenario block of a JSON config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ScenarioSpec {
    Prop1,
    DroSlow {
        #[serde(default = "dro_slow::default_mu1")]
        mu1: f64,
        #[serde(default = "dro_slow::default_mu2")]
        mu2: f64,
        #[serde(default = "dro_slow::default_radius")]
        radius: f64,
    },
    LinregCovshift {
        dim: usize,
        #[serde(default = "linreg::default_shift_bound")]
        shift_bound: f64,
        #[serde(default = "linreg::default_noise")]
        noise: f64,
        #[serde(default)]
        beta_star: Option<Vec<f64>>,
    },
    ContextualBandit(BanditSpec),
}

impl ScenarioSpec {
    pub fn instantiate(&self) -> Result<Box<dyn Scenario>> {
        Ok(match self {
            ScenarioSpec::Prop1 => Box::new(Prop1::new()),
            ScenarioSpec::DroSlow { mu1, mu2, radius } => Box::new(DroSlow::new(*mu1, *mu2, *radius)?),
            ScenarioSpec::LinregCovshift {
                dim,
                shift_bound,
                noise,
                beta_star,
            } => {
                let beta = match beta_star {
                    Some(b) => b.clone(),
                    None => linreg::default_beta_star(*dim),
                };
                Box::new(LinregCovshift::new(beta, *shift_bound, *noise)?)
            }
            ScenarioSpec::ContextualBandit(spec) => Box::new(BanditScenario::new(spec.clone())?),
        })
    }
}
