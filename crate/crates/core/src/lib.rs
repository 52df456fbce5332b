//! Minimax regret optimization over finite families of importance weights.
//!
//! The crate covers weighted datasets, bounded losses, three hypothesis
//! classes with exact ERM oracles, per-weight regret reports, the game
//! solver for MRO / scaled MRO / DRO, and a set of synthetic scenarios with
//! known population risks used by the rate experiments.

pub mod class;
pub mod data;
pub mod error;
pub mod json;
pub mod loss;
pub mod oracles;
pub mod risk;
pub mod rng;
pub mod scenarios;
pub mod solver;

pub use class::{ClassKind, FunctionClass, Hypothesis, Predictor};
pub use data::{validate_dataset, Dataset, Sample, Validated, ValidationReport, WeightFamily};
pub use error::{MroError, Result};
pub use loss::{LossKind, LossSpec};
pub use oracles::{erm, DirectOracle, ErmOracle, ErmRequest, PrecomputedOracle};
pub use risk::{
    empirical_regret_report, empirical_risk, population_regret_report, scaling_coefficients, PopulationMode,
    PopulationModel, RegretReport, ScalingRule,
};
pub use solver::{solve_game, Game, GameSolution, Mode, Objective};
