//! Replicated fits across sample sizes and log-log slope estimation.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::class::Hypothesis;
use crate::error::{MroError, Result};
use crate::json::format_real;
use crate::oracles::{erm, ErmRequest, PrecomputedOracle};
use crate::risk::{population_regret_report, population_risk, PopulationMode, ScalingRule};
use crate::rng::derive_seed;
use crate::solver::{solve_game, Objective, DEFAULT_ROUNDS};

use super::{Instance, Scenario};

/// How a hypothesis is fitted to one dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Method {
    Mro,
    Smro {
        scaling: ScalingRule,
    },
    Dro,
    /// Unweighted ERM on the training sample.
    ErmP0,
}

/// Population quantity recorded per replicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Metric {
    /// `max_w R_w(f) - R_w(f_w)`.
    WorstCaseRegret,
    /// `max_w R_w(f) - min_g max_w R_w(g)`.
    WorstCaseExcessRisk,
    /// `R_w(f) - R_w(f_w)` for one weight.
    WeightRegret { weight: usize },
}

/// Best iterate of the game for game methods, plain ERM otherwise.
pub fn fit_method(instance: &Instance, method: &Method, rounds: usize, eta: Option<f64>) -> Result<Hypothesis> {
    let objective = match method {
        Method::Mro => Objective::mro(),
        Method::Dro => Objective::dro(),
        Method::Smro { scaling } => Objective::smro(scaling.clone()),
        Method::ErmP0 => {
            let ones = vec![1.0; instance.dataset.len()];
            let request = ErmRequest::new(&ones, &instance.dataset, &instance.loss, &instance.class);
            return erm(&request);
        }
    };
    let oracle = PrecomputedOracle::new(&instance.dataset, instance.loss, instance.class.clone())?;
    let solution = solve_game(
        &instance.dataset,
        &instance.family,
        &oracle,
        &instance.loss,
        objective,
        rounds,
        eta,
    )?;
    Ok(solution.best_iterate_hypothesis)
}

pub fn evaluate_metric(
    hypothesis: &Hypothesis,
    scenario: &dyn Scenario,
    metric: &Metric,
    mode: PopulationMode,
) -> Result<f64> {
    match metric {
        Metric::WorstCaseRegret => Ok(population_regret_report(hypothesis, scenario, mode)?.worst_case_regret),
        Metric::WeightRegret { weight } => {
            let report = population_regret_report(hypothesis, scenario, mode)?;
            report
                .per_weight_regret
                .get(*weight)
                .copied()
                .ok_or(MroError::IndexOutOfRange {
                    index: *weight,
                    len: report.per_weight_regret.len(),
                })
        }
        Metric::WorstCaseExcessRisk => {
            let optimum = scenario.robust_risk_optimum().ok_or_else(|| {
                MroError::Unsupported(format!("{} has no closed-form robust optimum", scenario.name()))
            })?;
            let mut worst = f64::NEG_INFINITY;
            for w in 0..scenario.weight_names().len() {
                worst = worst.max(population_risk(hypothesis, scenario, w, mode)?);
            }
            Ok(worst - optimum)
        }
    }
}

/// Everything a sweep needs besides the scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepPlan {
    pub method: Method,
    pub metric: Metric,
    pub n_grid: Vec<usize>,
    pub replicates: usize,
    pub seed: u64,
    #[serde(default = "default_rounds", rename = "T")]
    pub rounds: usize,
    #[serde(default)]
    pub eta: Option<f64>,
    /// Defaults to the scenario's own evaluator.
    #[serde(default)]
    pub population: Option<PopulationMode>,
}

fn default_rounds() -> usize {
    DEFAULT_ROUNDS
}

impl SweepPlan {
    pub fn validate(&self) -> Result<()> {
        if self.n_grid.len() < 4 {
            return Err(MroError::InvalidArgument(format!(
                "n_grid needs at least 4 points, got {}",
                self.n_grid.len()
            )));
        }
        if self.n_grid.windows(2).any(|w| w[0] >= w[1]) || self.n_grid[0] == 0 {
            return Err(MroError::InvalidArgument(
                "n_grid must be positive and strictly increasing".into(),
            ));
        }
        if self.replicates == 0 {
            return Err(MroError::InvalidArgument("replicates must be >= 1".into()));
        }
        if self.rounds == 0 {
            return Err(MroError::InvalidArgument("T must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReplicateRecord {
    pub n: usize,
    pub replicate: usize,
    pub metric: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RateSweepResult {
    pub scenario: String,
    pub method: Method,
    pub metric: Metric,
    pub n_grid: Vec<usize>,
    pub replicates: usize,
    pub seed: u64,
    pub per_n_median_metric: Vec<f64>,
    pub fitted_slope: f64,
    #[serde(skip)]
    pub records: Vec<ReplicateRecord>,
}

impl RateSweepResult {
    /// Columns `n,replicate,metric`, ordered by `n` then replicate.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        write_records(&self.records, writer)
    }
}

pub fn write_records<W: Write>(records: &[ReplicateRecord], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["n", "replicate", "metric"])?;
    for r in records {
        w.write_record([r.n.to_string(), r.replicate.to_string(), format_real(r.metric)])?;
    }
    w.flush()?;
    Ok(())
}

/// A sweep stopped by a failing replicate; `completed` holds every replicate
/// that did finish.
#[derive(Debug, thiserror::Error)]
#[error("{error} ({} replicates completed)", completed.len())]
pub struct SweepFailure {
    pub completed: Vec<ReplicateRecord>,
    pub error: MroError,
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    }
}

/// Ordinary least squares slope of `ln y` on `ln n`.
pub fn fit_slope(ns: &[f64], values: &[f64]) -> Result<f64> {
    if ns.len() != values.len() || ns.len() < 2 {
        return Err(MroError::InvalidArgument(
            "slope fit needs at least two paired points".into(),
        ));
    }
    if ns.iter().chain(values).any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(MroError::NonFinite("log-log fit needs positive finite inputs".into()));
    }
    let xs: Vec<f64> = ns.iter().map(|n| n.ln()).collect();
    let ys: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(MroError::InvalidArgument("slope fit needs distinct n".into()));
    }
    Ok(sxy / sxx)
}

fn run_replicate(scenario: &dyn Scenario, plan: &SweepPlan, n: usize, replicate: usize) -> Result<f64> {
    let instance = scenario.build(n, derive_seed(plan.seed, n as u64, replicate as u64))?;
    let h = fit_method(&instance, &plan.method, plan.rounds, plan.eta)?;
    let mode = plan.population.unwrap_or_else(|| scenario.default_population_mode());
    evaluate_metric(&h, scenario, &plan.metric, mode)
}

/// Fits every `(n, replicate)` pair in parallel on the current rayon pool.
///
/// Replicate seeds depend only on `(seed, n, replicate)`, so the result does
/// not depend on scheduling.
pub fn rate_sweep(scenario: &dyn Scenario, plan: &SweepPlan) -> std::result::Result<RateSweepResult, SweepFailure> {
    if let Err(error) = plan.validate() {
        return Err(SweepFailure {
            completed: Vec::new(),
            error,
        });
    }
    let jobs: Vec<(usize, usize)> = plan
        .n_grid
        .iter()
        .flat_map(|&n| (0..plan.replicates).map(move |r| (n, r)))
        .collect();
    let outcomes: Vec<Result<f64>> = jobs
        .par_iter()
        .map(|&(n, r)| run_replicate(scenario, plan, n, r))
        .collect();

    let mut records = Vec::with_capacity(jobs.len());
    let mut first_error = None;
    for (&(n, replicate), outcome) in jobs.iter().zip(outcomes) {
        match outcome {
            Ok(metric) => records.push(ReplicateRecord { n, replicate, metric }),
            Err(e) if first_error.is_none() => {
                first_error = Some(MroError::Replicate {
                    n,
                    replicate,
                    source: Box::new(e),
                })
            }
            Err(_) => {}
        }
    }
    if let Some(error) = first_error {
        return Err(SweepFailure {
            completed: records,
            error,
        });
    }

    let per_n_median_metric: Vec<f64> = plan
        .n_grid
        .iter()
        .map(|&n| {
            let vals: Vec<f64> = records.iter().filter(|r| r.n == n).map(|r| r.metric).collect();
            median(&vals)
        })
        .collect();
    let ns: Vec<f64> = plan.n_grid.iter().map(|&n| n as f64).collect();
    let fitted_slope = fit_slope(&ns, &per_n_median_metric).map_err(|error| SweepFailure {
        completed: records.clone(),
        error,
    })?;
    Ok(RateSweepResult {
        scenario: scenario.name().to_string(),
        method: plan.method.clone(),
        metric: plan.metric.clone(),
        n_grid: plan.n_grid.clone(),
        replicates: plan.replicates,
        seed: plan.seed,
        per_n_median_metric,
        fitted_slope,
        records,
    })
}
