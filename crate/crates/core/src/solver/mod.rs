//! Two-player game solver for MRO, scaled MRO and DRO.
//!
//! The weight player runs exponentiated gradient over the finite family,
//! starting from the uniform distribution; the hypothesis player best-responds
//! with one weighted ERM call per round:
//!
//! ```text
//! f_t     = argmin_f Σ_w ρ_t(w) R̂_w(f) / c_w
//! ρ_{t+1} ∝ ρ_t · exp(η · payoff(f_t, w))
//! ```
//!
//! where `payoff` is `R̂_w(f) - R̂_w(f̂_w)` (MRO), the same divided by `c_w`
//! (SMRO), or the raw risk `R̂_w(f)` (DRO).

pub mod bounded_family;
pub mod matrix_game;

use serde::{Deserialize, Serialize};

use crate::class::{ClassKind, FunctionClass, Hypothesis};
use crate::data::{Dataset, WeightFamily};
use crate::error::{MroError, Result};
use crate::loss::LossSpec;
use crate::oracles::ErmOracle;
use crate::risk::{argmax, scaling_coefficients, ScalingRule};

pub use bounded_family::{bounded_weight_dual, worst_case_regret_bounded_family};
pub use matrix_game::{mixed_game_value, MatrixGameSolution};

pub const DEFAULT_ROUNDS: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Mro,
    Smro,
    Dro,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Objective {
    pub mode: Mode,
    /// Only consulted in SMRO mode.
    pub scaling: ScalingRule,
}

impl Objective {
    pub fn mro() -> Self {
        Self {
            mode: Mode::Mro,
            scaling: ScalingRule::None,
        }
    }

    pub fn dro() -> Self {
        Self {
            mode: Mode::Dro,
            scaling: ScalingRule::None,
        }
    }

    pub fn smro(scaling: ScalingRule) -> Self {
        Self {
            mode: Mode::Smro,
            scaling,
        }
    }
}

/// Per-weight ERM values `R̂_w(f̂_w)` and the minimizers.
#[derive(Debug, Clone)]
pub struct Baselines {
    pub values: Vec<f64>,
    pub hypotheses: Vec<Hypothesis>,
}

/// One oracle call per weight column with `ω_i = W[i, w]`.
pub fn precompute_baselines(dataset: &Dataset, oracle: &dyn ErmOracle) -> Result<Baselines> {
    let m = oracle.num_weights();
    if dataset.num_weights() != m {
        return Err(MroError::DimensionMismatch {
            expected: m,
            got: dataset.num_weights(),
        });
    }
    let mut values = Vec::with_capacity(m);
    let mut hypotheses = Vec::with_capacity(m);
    for w in 0..m {
        if dataset.column(w).iter().all(|&v| v == 0.0) {
            return Err(MroError::Oracle(format!(
                "weight column `{}` is identically zero",
                dataset.weight_names()[w]
            )));
        }
        let mut unit = vec![0.0; m];
        unit[w] = 1.0;
        let h = oracle.best_response(&unit)?;
        values.push(oracle.risks(&h)?[w]);
        hypotheses.push(h);
    }
    Ok(Baselines { values, hypotheses })
}

/// Payoff of one weight given its risk; `scale` is `c_w` (ignored outside SMRO).
#[inline]
pub fn payoff_value(mode: Mode, risk: f64, baseline: f64, scale: f64) -> f64 {
    match mode {
        Mode::Mro => risk - baseline,
        Mode::Smro => (risk - baseline) / scale,
        Mode::Dro => risk,
    }
}

/// `√(ln|W| / (B² T))`, zero for a single weight.
pub fn default_eta(payoff_range: f64, rounds: usize, family_size: usize) -> f64 {
    if family_size <= 1 {
        return 0.0;
    }
    ((family_size as f64).ln() / (payoff_range * payoff_range * rounds as f64)).sqrt()
}

/// `2B √(ln|W| / T)`: the guaranteed suboptimality of the iterate mixture.
pub fn gap_bound(payoff_range: f64, rounds: usize, family_size: usize) -> f64 {
    2.0 * payoff_range * ((family_size as f64).ln() / rounds as f64).sqrt()
}

/// One exponentiated-gradient step on a simplex point.
pub fn eg_step(rho: &[f64], payoffs: &[f64], eta: f64) -> Vec<f64> {
    let logits: Vec<f64> = rho.iter().zip(payoffs).map(|(r, p)| r.ln() + eta * p).collect();
    softmax(&logits)
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let top = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = logits.iter().map(|l| (l - top).exp()).collect();
    let total: f64 = out.iter().sum();
    out.iter_mut().for_each(|v| *v /= total);
    out
}

/// Exact minimax over pure members of a finite class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PureMinimax {
    pub index: usize,
    pub value: f64,
}

/// Result of [`Game::solve`].
#[derive(Debug, Clone, Serialize)]
pub struct GameSolution {
    pub mode: Mode,
    pub eta: f64,
    #[serde(rename = "T")]
    pub rounds: usize,
    /// `B` used for the default step size and the gap bound.
    pub payoff_range: f64,
    pub scaling: Vec<f64>,
    pub rho_final: Vec<f64>,
    pub per_weight_baselines: Vec<f64>,
    /// `sup_w (1/T) Σ_t payoff(f_t, w)`: worst-case payoff of the mixture `P_T`.
    pub mixture_value: f64,
    /// `(1/T) Σ_t sup_w payoff(f_t, w)`.
    pub iterate_average_value: f64,
    /// `max_t Σ_w ρ_t(w) payoff(f_t, w)`, a lower bound on the game value.
    pub duality_lower_bound: f64,
    pub gap_certificate: f64,
    /// `2B√(ln|W|/T)`.
    pub gap_bound: f64,
    pub best_iterate: usize,
    pub best_iterate_value: f64,
    pub best_iterate_hypothesis: Hypothesis,
    /// Parameter average of the iterates, for convex classes.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub average_iterate: Option<Hypothesis>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub average_iterate_value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pure_minimax: Option<PureMinimax>,
    #[serde(skip)]
    pub iterates: Vec<Hypothesis>,
    /// `sup_w payoff(f_t, w)` per round.
    #[serde(skip)]
    pub iterate_values: Vec<f64>,
    /// `ρ_1, …, ρ_T`.
    #[serde(skip)]
    pub rho_history: Vec<Vec<f64>>,
}

impl GameSolution {
    pub fn best_hypothesis(&self) -> &Hypothesis {
        &self.best_iterate_hypothesis
    }
}

/// A game bound to a dataset, oracle, and objective, with baselines and
/// scaling coefficients precomputed.
pub struct Game<'a> {
    dataset: &'a Dataset,
    oracle: &'a dyn ErmOracle,
    objective: Objective,
    baselines: Baselines,
    scaling: Vec<f64>,
    payoff_range: f64,
}

impl<'a> Game<'a> {
    pub fn new(
        dataset: &'a Dataset,
        family: &WeightFamily,
        oracle: &'a dyn ErmOracle,
        loss: &LossSpec,
        objective: Objective,
    ) -> Result<Self> {
        if family.len() != dataset.num_weights() || oracle.num_weights() != family.len() {
            return Err(MroError::DimensionMismatch {
                expected: family.len(),
                got: dataset.num_weights(),
            });
        }
        let scaling = match objective.mode {
            Mode::Smro => scaling_coefficients(&objective.scaling, dataset, family)?,
            Mode::Mro | Mode::Dro => vec![1.0; family.len()],
        };
        let baselines = precompute_baselines(dataset, oracle)?;
        let payoff_range = family
            .bounds()
            .iter()
            .zip(&scaling)
            .map(|(b, c)| loss.bound * b / c)
            .fold(0.0, f64::max);
        if !(payoff_range.is_finite() && payoff_range > 0.0) {
            return Err(MroError::InvalidArgument(format!("payoff range is {payoff_range}")));
        }
        Ok(Self {
            dataset,
            oracle,
            objective,
            baselines,
            scaling,
            payoff_range,
        })
    }

    pub fn dataset(&self) -> &Dataset {
        self.dataset
    }

    pub fn baselines(&self) -> &Baselines {
        &self.baselines
    }

    pub fn scaling(&self) -> &[f64] {
        &self.scaling
    }

    pub fn payoff_range(&self) -> f64 {
        self.payoff_range
    }

    pub fn num_weights(&self) -> usize {
        self.scaling.len()
    }

    /// Payoffs of `hypothesis` against every weight.
    pub fn payoffs(&self, hypothesis: &Hypothesis) -> Result<Vec<f64>> {
        let risks = self.oracle.risks(hypothesis)?;
        let out: Vec<f64> = risks
            .iter()
            .zip(&self.baselines.values)
            .zip(&self.scaling)
            .map(|((&r, &b), &c)| payoff_value(self.objective.mode, r, b, c))
            .collect();
        if out.iter().any(|p| !p.is_finite()) {
            return Err(MroError::NonFinite("payoff".into()));
        }
        Ok(out)
    }

    pub fn payoff(&self, hypothesis: &Hypothesis, weight_index: usize) -> Result<f64> {
        let m = self.num_weights();
        if weight_index >= m {
            return Err(MroError::IndexOutOfRange {
                index: weight_index,
                len: m,
            });
        }
        Ok(self.payoffs(hypothesis)?[weight_index])
    }

    /// Full payoff matrix `|F| × |W|` for finite classes.
    pub fn payoff_matrix(&self) -> Result<Option<Vec<Vec<f64>>>> {
        if self.oracle.class().kind() != ClassKind::Finite {
            return Ok(None);
        }
        let members = self.oracle.class().members()?;
        members
            .iter()
            .map(|h| self.payoffs(h))
            .collect::<Result<Vec<_>>>()
            .map(Some)
    }

    /// Runs `rounds` rounds; `eta` defaults to `√(ln|W|/(B²T))`.
    pub fn solve(&self, rounds: usize, eta: Option<f64>) -> Result<GameSolution> {
        if rounds == 0 {
            return Err(MroError::InvalidArgument("T must be at least 1".into()));
        }
        let m = self.num_weights();
        let eta = eta.unwrap_or_else(|| default_eta(self.payoff_range, rounds, m));
        if !(eta.is_finite() && eta >= 0.0) {
            return Err(MroError::InvalidArgument(format!("invalid step size {eta}")));
        }

        let mut rho = vec![1.0 / m as f64; m];
        let mut payoff_sums = vec![0.0; m];
        let mut iterates = Vec::new();
        let mut iterate_values = Vec::new();
        let mut rho_history = Vec::new();
        let mut duality_lower_bound = f64::NEG_INFINITY;

        // a single weight leaves ρ fixed, so every round is the same ERM call
        let effective_rounds = if m == 1 { 1 } else { rounds };
        for _ in 0..effective_rounds {
            let coefficients: Vec<f64> = rho.iter().zip(&self.scaling).map(|(r, c)| r / c).collect();
            let f_t = self.oracle.best_response(&coefficients)?;
            let payoffs = self.payoffs(&f_t)?;
            let expected: f64 = rho.iter().zip(&payoffs).map(|(r, p)| r * p).sum();
            duality_lower_bound = duality_lower_bound.max(expected);
            for (s, p) in payoff_sums.iter_mut().zip(&payoffs) {
                *s += p;
            }
            iterate_values.push(payoffs.iter().copied().fold(f64::NEG_INFINITY, f64::max));
            iterates.push(f_t);
            let next = eg_step(&rho, &payoffs, eta);
            rho_history.push(std::mem::replace(&mut rho, next));
        }

        let t = effective_rounds as f64;
        let mixture_value = payoff_sums.iter().map(|s| s / t).fold(f64::NEG_INFINITY, f64::max);
        let iterate_average_value = iterate_values.iter().sum::<f64>() / t;
        let (best_iterate, best_iterate_value) = {
            let mut best = (0, iterate_values[0]);
            for (i, &v) in iterate_values.iter().enumerate().skip(1) {
                if v < best.1 {
                    best = (i, v);
                }
            }
            best
        };

        let average_iterate = self.average_iterate(&iterates)?;
        let average_iterate_value = match &average_iterate {
            Some(h) => Some(self.payoffs(h)?.into_iter().fold(f64::NEG_INFINITY, f64::max)),
            None => None,
        };

        let matrix = self.payoff_matrix()?;
        let pure_minimax = matrix.as_ref().map(|rows| {
            let worst: Vec<f64> = rows
                .iter()
                .map(|r| r.iter().copied().fold(f64::NEG_INFINITY, f64::max))
                .collect();
            let mut best = (0, worst[0]);
            for (i, &v) in worst.iter().enumerate().skip(1) {
                if v < best.1 {
                    best = (i, v);
                }
            }
            PureMinimax {
                index: best.0,
                value: best.1,
            }
        });
        let gap_certificate = match &matrix {
            Some(rows) => mixture_value - mixed_game_value(rows)?.value,
            None => mixture_value - duality_lower_bound,
        };

        Ok(GameSolution {
            mode: self.objective.mode,
            eta,
            rounds,
            payoff_range: self.payoff_range,
            scaling: self.scaling.clone(),
            rho_final: rho,
            per_weight_baselines: self.baselines.values.clone(),
            mixture_value,
            iterate_average_value,
            duality_lower_bound,
            gap_certificate,
            gap_bound: gap_bound(self.payoff_range, rounds, m),
            best_iterate,
            best_iterate_value,
            best_iterate_hypothesis: iterates[best_iterate].clone(),
            average_iterate,
            average_iterate_value,
            pure_minimax,
            iterates,
            iterate_values,
            rho_history,
        })
    }

    fn average_iterate(&self, iterates: &[Hypothesis]) -> Result<Option<Hypothesis>> {
        let class = self.oracle.class();
        if class.kind() == ClassKind::Finite {
            return Ok(None);
        }
        let dim = iterates[0].parameters().len();
        let mut mean = vec![0.0; dim];
        for h in iterates {
            for (m, p) in mean.iter_mut().zip(h.parameters()) {
                *m += p;
            }
        }
        let t = iterates.len() as f64;
        mean.iter_mut().for_each(|m| *m /= t);
        match class {
            FunctionClass::IntervalConstant { radius } => class.constant(mean[0].clamp(-radius, *radius)).map(Some),
            _ => class.linear(mean).map(Some),
        }
    }

    /// Recomputes the certificate of `solution`: the distance from the
    /// mixture's worst-case payoff to the exact mixed game value (finite
    /// classes) or to the best weak-duality lower bound seen during play.
    pub fn gap_certificate(&self, solution: &GameSolution) -> Result<f64> {
        let m = self.num_weights();
        let mut sums = vec![0.0; m];
        for h in &solution.iterates {
            for (s, p) in sums.iter_mut().zip(self.payoffs(h)?) {
                *s += p;
            }
        }
        let t = solution.iterates.len() as f64;
        let mixture = sums.iter().map(|s| s / t).fold(f64::NEG_INFINITY, f64::max);
        match self.payoff_matrix()? {
            Some(rows) => Ok(mixture - mixed_game_value(&rows)?.value),
            None => {
                let mut lower = f64::NEG_INFINITY;
                for (h, rho) in solution.iterates.iter().zip(&solution.rho_history) {
                    let e: f64 = rho.iter().zip(self.payoffs(h)?).map(|(r, p)| r * p).sum();
                    lower = lower.max(e);
                }
                Ok(mixture - lower)
            }
        }
    }

    /// Per-weight payoffs of the best iterate with the argmax weight.
    pub fn worst_weight(&self, hypothesis: &Hypothesis) -> Result<(usize, f64)> {
        Ok(argmax(&self.payoffs(hypothesis)?))
    }
}

/// Convenience wrapper: builds the [`Game`] and runs it.
pub fn solve_game(
    dataset: &Dataset,
    family: &WeightFamily,
    oracle: &dyn ErmOracle,
    loss: &LossSpec,
    objective: Objective,
    rounds: usize,
    eta_override: Option<f64>,
) -> Result<GameSolution> {
    Game::new(dataset, family, oracle, loss, objective)?.solve(rounds, eta_override)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eta_formula() {
        assert_eq!(default_eta(2.0, 100, 1), 0.0);
        let eta = default_eta(2.0, 100, 2);
        assert!((eta - (2f64.ln() / 400.0).sqrt()).abs() < 1e-17);
        assert!((eta - 0.041_627_730_557_884_9).abs() < 1e-12);
        let quarter = default_eta(2.0, 400, 2);
        assert!((quarter * 2.0 - eta).abs() < 1e-16);
    }

    #[test]
    fn eg_step_by_hand() {
        let next = eg_step(&[0.5, 0.5], &[0.2, 0.0], 0.5);
        let e = 0.1f64.exp();
        assert!((next[0] - e / (e + 1.0)).abs() < 1e-15);
        assert!((next[0] - 0.524_979).abs() < 1e-6);
        assert!((next[1] - 0.475_021).abs() < 1e-6);
        assert!((next.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn payoff_modes() {
        assert!((payoff_value(Mode::Mro, 0.25, 0.04, 7.0) - 0.21).abs() < 1e-15);
        assert_eq!(payoff_value(Mode::Dro, 0.25, 0.04, 7.0), 0.25);
        assert!((payoff_value(Mode::Smro, 0.25, 0.05, 2.0) - 0.1).abs() < 1e-15);
    }
}
