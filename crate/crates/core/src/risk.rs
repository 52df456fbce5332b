//! Empirical and population risk, per-weight regret reports, and the
//! scaling coefficients of scaled MRO.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::class::Hypothesis;
use crate::data::{empirical_weight_second_moment, Dataset, Sample, WeightFamily};
use crate::error::{MroError, Result};
use crate::json::format_real;
use crate::loss::LossSpec;
use crate::rng::{self, Rng};

/// Negative empirical regrets down to this value are attributed to oracle
/// error and shown as zero in reports.
pub const REGRET_CLAMP: f64 = 1e-8;

/// `(1/n) Σ_i ω_i ℓ(y_i, h(x_i))`. Assumes `h` is compatible with `dataset`.
pub fn weighted_risk(hypothesis: &Hypothesis, weights: &[f64], dataset: &Dataset, loss: &LossSpec) -> f64 {
    let total: f64 = dataset
        .samples()
        .iter()
        .zip(weights)
        .filter(|(_, &w)| w != 0.0)
        .map(|(s, &w)| w * loss.eval(s.label, hypothesis.predict(s)))
        .sum();
    total / dataset.len() as f64
}

/// `R̂_w(h) = (1/n) Σ_i w(z_i) ℓ(z_i, h(z_i))`.
pub fn empirical_risk(hypothesis: &Hypothesis, weight_index: usize, dataset: &Dataset, loss: &LossSpec) -> Result<f64> {
    if weight_index >= dataset.num_weights() {
        return Err(MroError::IndexOutOfRange {
            index: weight_index,
            len: dataset.num_weights(),
        });
    }
    hypothesis.check_compatible(dataset)?;
    Ok(weighted_risk(hypothesis, dataset.column(weight_index), dataset, loss))
}

/// Per-weight risks, baselines and regrets of one hypothesis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretReport {
    pub weight_names: Vec<String>,
    pub per_weight_risk: Vec<f64>,
    pub per_weight_baseline: Vec<f64>,
    /// Raw `risk - baseline`; may be slightly negative for empirical reports.
    pub per_weight_regret: Vec<f64>,
    pub worst_case_regret: f64,
    pub argmax_weight: usize,
}

impl RegretReport {
    pub fn new(weight_names: Vec<String>, risks: Vec<f64>, baselines: Vec<f64>) -> Result<Self> {
        if risks.len() != baselines.len() || risks.len() != weight_names.len() {
            return Err(MroError::DimensionMismatch {
                expected: risks.len(),
                got: baselines.len(),
            });
        }
        if risks.is_empty() {
            return Err(MroError::InvalidArgument("empty regret report".into()));
        }
        let regrets: Vec<f64> = risks.iter().zip(&baselines).map(|(r, b)| r - b).collect();
        if regrets.iter().any(|r| !r.is_finite()) {
            return Err(MroError::NonFinite("regret".into()));
        }
        let (argmax, worst) = argmax(&regrets);
        Ok(Self {
            weight_names,
            per_weight_risk: risks,
            per_weight_baseline: baselines,
            per_weight_regret: regrets,
            worst_case_regret: worst,
            argmax_weight: argmax,
        })
    }

    /// Regrets with values in `[-REGRET_CLAMP, 0)` shown as zero.
    pub fn clamped_regrets(&self) -> Vec<f64> {
        self.per_weight_regret
            .iter()
            .map(|&r| if (-REGRET_CLAMP..0.0).contains(&r) { 0.0 } else { r })
            .collect()
    }

    pub fn worst_case_risk(&self) -> f64 {
        self.per_weight_risk.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// CSV with columns `weight_name,risk,baseline,regret`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        out.write_record(["weight_name", "risk", "baseline", "regret"])?;
        for (i, regret) in self.clamped_regrets().into_iter().enumerate() {
            out.write_record([
                self.weight_names[i].clone(),
                format_real(self.per_weight_risk[i]),
                format_real(self.per_weight_baseline[i]),
                format_real(regret),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Index and value of the maximum; ties go to the lowest index.
pub(crate) fn argmax(values: &[f64]) -> (usize, f64) {
    let mut best = (0, values[0]);
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > best.1 {
            best = (i, v);
        }
    }
    best
}

/// Report of `hypothesis` against precomputed ERM baselines `R̂_w(f̂_w)`.
pub fn empirical_regret_report(
    hypothesis: &Hypothesis,
    dataset: &Dataset,
    loss: &LossSpec,
    baselines: &[f64],
) -> Result<RegretReport> {
    if baselines.len() != dataset.num_weights() {
        return Err(MroError::DimensionMismatch {
            expected: dataset.num_weights(),
            got: baselines.len(),
        });
    }
    hypothesis.check_compatible(dataset)?;
    let risks = dataset
        .columns()
        .iter()
        .map(|col| weighted_risk(hypothesis, col, dataset, loss))
        .collect();
    RegretReport::new(dataset.weight_names().to_vec(), risks, baselines.to_vec())
}

/// How the per-weight regrets are scaled in SMRO.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ScalingRule {
    /// `c_w = 1`.
    None,
    /// `c_w = σ̂_w + B_w/√n` with `σ̂_w² = (1/n) Σ w(z_i)²`.
    Slow,
    /// `c_w = B_w`.
    Fast,
    Explicit {
        values: Vec<f64>,
    },
}

pub fn scaling_coefficients(rule: &ScalingRule, dataset: &Dataset, family: &WeightFamily) -> Result<Vec<f64>> {
    let m = family.len();
    if dataset.num_weights() != m {
        return Err(MroError::DimensionMismatch {
            expected: m,
            got: dataset.num_weights(),
        });
    }
    let coefficients = match rule {
        ScalingRule::None => vec![1.0; m],
        ScalingRule::Fast => family.bounds().to_vec(),
        ScalingRule::Slow => {
            let root_n = (dataset.len() as f64).sqrt();
            (0..m)
                .map(|w| Ok(empirical_weight_second_moment(dataset, w)?.sqrt() + family.bound(w) / root_n))
                .collect::<Result<Vec<_>>>()?
        }
        ScalingRule::Explicit { values } => {
            if values.len() != m {
                return Err(MroError::DimensionMismatch {
                    expected: m,
                    got: values.len(),
                });
            }
            values.clone()
        }
    };
    if let Some(w) = coefficients.iter().position(|c| !(c.is_finite() && *c > 0.0)) {
        return Err(MroError::InvalidArgument(format!(
            "scaling coefficient of `{}` is {} (must be > 0)",
            family.names()[w],
            coefficients[w]
        )));
    }
    Ok(coefficients)
}

/// Population side of a synthetic scenario.
pub trait PopulationModel: Sync {
    fn weight_names(&self) -> Vec<String>;

    fn loss(&self) -> LossSpec;

    /// Closed-form `R_w(h)`, or `None` when the scenario has none.
    fn exact_risk(&self, hypothesis: &Hypothesis, weight_index: usize) -> Option<f64>;

    /// One draw from the target distribution `P_w`.
    fn sample_target(&self, weight_index: usize, rng: &mut Rng) -> Sample;

    /// The class minimizer `f_w` of `R_w`, when known in closed form.
    fn population_minimizer(&self, weight_index: usize) -> Option<Hypothesis>;

    /// `min_f max_w R_w(f)`, when known in closed form.
    fn robust_risk_optimum(&self) -> Option<f64> {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PopulationMode {
    Exact,
    MonteCarlo { samples: usize, seed: u64 },
}

/// A population quantity with its Monte Carlo standard error (zero if exact).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

pub fn population_risk_estimate(
    hypothesis: &Hypothesis,
    scenario: &dyn PopulationModel,
    weight_index: usize,
    mode: PopulationMode,
) -> Result<Estimate> {
    let m = scenario.weight_names().len();
    if weight_index >= m {
        return Err(MroError::IndexOutOfRange {
            index: weight_index,
            len: m,
        });
    }
    match mode {
        PopulationMode::Exact => scenario
            .exact_risk(hypothesis, weight_index)
            .map(|value| Estimate { value, std_error: 0.0 })
            .ok_or_else(|| MroError::Unsupported("scenario has no closed-form risk".into())),
        PopulationMode::MonteCarlo { samples, seed } => {
            if samples < 2 {
                return Err(MroError::InvalidArgument("monte carlo needs at least 2 samples".into()));
            }
            let loss = scenario.loss();
            let mut rng = rng::seeded(seed);
            // Welford
            let (mut mean, mut m2) = (0.0, 0.0);
            for k in 0..samples {
                let s = scenario.sample_target(weight_index, &mut rng);
                let v = loss.eval(s.label, hypothesis.predict(&s));
                let delta = v - mean;
                mean += delta / (k + 1) as f64;
                m2 += delta * (v - mean);
            }
            let var = m2 / (samples - 1) as f64;
            Ok(Estimate {
                value: mean,
                std_error: (var / samples as f64).sqrt(),
            })
        }
    }
}

/// `R_w(h) = E_{z ~ P_w} ℓ(z, h(z))`.
pub fn population_risk(
    hypothesis: &Hypothesis,
    scenario: &dyn PopulationModel,
    weight_index: usize,
    mode: PopulationMode,
) -> Result<f64> {
    population_risk_estimate(hypothesis, scenario, weight_index, mode).map(|e| e.value)
}

/// Population regrets `R_w(h) - R_w(f_w)` for every weight.
pub fn population_regret_report(
    hypothesis: &Hypothesis,
    scenario: &dyn PopulationModel,
    mode: PopulationMode,
) -> Result<RegretReport> {
    let names = scenario.weight_names();
    let mut risks = Vec::with_capacity(names.len());
    let mut baselines = Vec::with_capacity(names.len());
    for w in 0..names.len() {
        let minimizer = scenario
            .population_minimizer(w)
            .ok_or_else(|| MroError::Unsupported(format!("no closed-form minimizer for `{}`", names[w])))?;
        risks.push(population_risk(hypothesis, scenario, w, mode)?);
        baselines.push(population_risk(&minimizer, scenario, w, mode)?);
    }
    RegretReport::new(names, risks, baselines)
}
