//! Reward regression from logged contextual-bandit data.
//!
//! Contexts are `x = u/√p` with `u` uniform on `[-1, 1]^p`. The logging
//! policy `μ` picks an action, and the reward is `r = θ*_aᵀx + ν` with `ν`
//! uniform on `[-h, h]`. Samples carry the joint features `φ(x, a) = e_a ⊗ x`
//! so a linear model over `φ` fits one reward vector per action. Every
//! candidate policy `π` contributes the weight `π(a|x)/μ(a|x)`.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::class::{FunctionClass, Hypothesis};
use crate::data::{Dataset, Sample, WeightFamily};
use crate::error::{MroError, Result};
use crate::loss::LossSpec;
use crate::risk::{PopulationMode, PopulationModel};
use crate::rng::{self, Rng};

use super::{Instance, Scenario};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PolicySpec {
    Uniform,
    /// `π(a|x) ∝ exp((Sx)_a / temperature)` for a `K × p` score matrix `S`.
    Softmax {
        scores: Vec<Vec<f64>>,
        temperature: f64,
    },
    /// `argmax_a (Sx)_a`, lowest action on ties.
    Greedy {
        scores: Vec<Vec<f64>>,
    },
}

impl PolicySpec {
    fn validate(&self, actions: usize, dim: usize) -> Result<()> {
        let check_scores = |scores: &Vec<Vec<f64>>| -> Result<()> {
            if scores.len() != actions || scores.iter().any(|r| r.len() != dim) {
                return Err(MroError::InvalidArgument(format!(
                    "policy scores must be a {actions} x {dim} matrix"
                )));
            }
            if scores.iter().flatten().any(|v| !v.is_finite()) {
                return Err(MroError::NonFinite("policy scores".into()));
            }
            Ok(())
        };
        match self {
            PolicySpec::Uniform => Ok(()),
            PolicySpec::Softmax { scores, temperature } => {
                if !(temperature.is_finite() && *temperature > 0.0) {
                    return Err(MroError::InvalidArgument(format!(
                        "temperature must be > 0, got {temperature}"
                    )));
                }
                check_scores(scores)
            }
            PolicySpec::Greedy { scores } => check_scores(scores),
        }
    }

    /// Action probabilities at context `x`.
    pub fn probabilities(&self, actions: usize, x: &[f64]) -> Vec<f64> {
        let score = |scores: &[Vec<f64>]| -> Vec<f64> {
            scores
                .iter()
                .map(|row| row.iter().zip(x).map(|(s, v)| s * v).sum())
                .collect()
        };
        match self {
            PolicySpec::Uniform => vec![1.0 / actions as f64; actions],
            PolicySpec::Softmax { scores, temperature } => {
                let logits: Vec<f64> = score(scores).iter().map(|s| s / temperature).collect();
                let top = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let exp: Vec<f64> = logits.iter().map(|l| (l - top).exp()).collect();
                let total: f64 = exp.iter().sum();
                exp.iter().map(|e| e / total).collect()
            }
            PolicySpec::Greedy { scores } => {
                let s = score(scores);
                let mut best = 0;
                for a in 1..actions {
                    if s[a] > s[best] {
                        best = a;
                    }
                }
                let mut p = vec![0.0; actions];
                p[best] = 1.0;
                p
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedPolicy {
    pub name: String,
    pub policy: PolicySpec,
}

fn default_noise() -> f64 {
    0.1
}

fn default_radius() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BanditSpec {
    pub actions: usize,
    pub context_dim: usize,
    pub policies: Vec<NamedPolicy>,
    pub logging: PolicySpec,
    /// Required lower bound on `μ(a|x)`.
    pub floor: f64,
    /// Row-major `K × p` reward vectors; a fixed default when absent.
    #[serde(default)]
    pub theta_star: Option<Vec<f64>>,
    #[serde(default = "default_noise")]
    pub noise: f64,
    /// Radius of the reward-regression ball.
    #[serde(default = "default_radius")]
    pub radius: f64,
}

#[derive(Debug, Clone)]
pub struct BanditScenario {
    spec: BanditSpec,
    theta: Vec<f64>,
}

/// Deterministic `θ*` with norm `0.8`.
pub fn default_theta_star(actions: usize, dim: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..actions * dim).map(|i| ((i as f64) * 1.7 + 0.3).cos()).collect();
    let norm = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
    raw.iter().map(|v| 0.8 * v / norm).collect()
}

impl BanditScenario {
    pub fn new(spec: BanditSpec) -> Result<Self> {
        let (k, p) = (spec.actions, spec.context_dim);
        if k < 2 || p < 1 {
            return Err(MroError::InvalidArgument(
                "bandit needs K >= 2 actions and context dim >= 1".into(),
            ));
        }
        if spec.policies.is_empty() {
            return Err(MroError::InvalidArgument(
                "bandit needs at least one candidate policy".into(),
            ));
        }
        if !(spec.floor > 0.0 && spec.floor <= 1.0 / k as f64) {
            return Err(MroError::InvalidArgument(format!(
                "floor must lie in (0, 1/K], got {}",
                spec.floor
            )));
        }
        if !(spec.noise.is_finite() && spec.noise >= 0.0 && spec.radius.is_finite() && spec.radius > 0.0) {
            return Err(MroError::InvalidArgument("noise must be >= 0 and radius > 0".into()));
        }
        spec.logging.validate(k, p)?;
        for named in &spec.policies {
            named.policy.validate(k, p)?;
        }
        let theta = match &spec.theta_star {
            Some(t) => t.clone(),
            None => default_theta_star(k, p),
        };
        if theta.len() != k * p {
            return Err(MroError::DimensionMismatch {
                expected: k * p,
                got: theta.len(),
            });
        }
        let norm = theta.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(norm <= spec.radius) {
            return Err(MroError::InvalidArgument(format!(
                "‖θ*‖ = {norm} exceeds the class radius {}",
                spec.radius
            )));
        }
        Ok(Self { spec, theta })
    }

    pub fn spec(&self) -> &BanditSpec {
        &self.spec
    }

    pub fn theta_star(&self) -> &[f64] {
        &self.theta
    }

    pub fn feature_dim(&self) -> usize {
        self.spec.actions * self.spec.context_dim
    }

    pub fn class(&self) -> FunctionClass {
        FunctionClass::linear_ball(self.feature_dim(), self.spec.radius).expect("validated")
    }

    /// `|r| ≤ max_a ‖θ_a‖ + h`.
    pub fn label_bound(&self) -> f64 {
        let p = self.spec.context_dim;
        let max_row = self
            .theta
            .chunks(p)
            .map(|r| r.iter().map(|v| v * v).sum::<f64>().sqrt())
            .fold(0.0, f64::max);
        max_row + self.spec.noise
    }

    pub fn loss_spec(&self) -> LossSpec {
        LossSpec::squared((self.label_bound() + self.spec.radius).powi(2))
    }

    /// `max π/μ ≤ 1/floor`, or exactly one when `π` is the logging policy.
    fn weight_bound(&self, policy: &PolicySpec) -> f64 {
        if *policy == self.spec.logging {
            1.0
        } else {
            1.0 / self.spec.floor
        }
    }

    fn draw_context(&self, rng: &mut Rng) -> Vec<f64> {
        let scale = 1.0 / (self.spec.context_dim as f64).sqrt();
        (0..self.spec.context_dim)
            .map(|_| rng.gen_range(-1.0..=1.0) * scale)
            .collect()
    }

    fn draw_action(probabilities: &[f64], rng: &mut Rng) -> usize {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (a, p) in probabilities.iter().enumerate() {
            acc += p;
            if u < acc {
                return a;
            }
        }
        // round-off leaves acc slightly below one; take the last supported action
        probabilities.iter().rposition(|&p| p > 0.0).unwrap_or(0)
    }

    fn observe(&self, x: &[f64], action: usize, rng: &mut Rng) -> Sample {
        let p = self.spec.context_dim;
        let mut phi = vec![0.0; self.feature_dim()];
        phi[action * p..(action + 1) * p].copy_from_slice(x);
        let mean: f64 = self.theta[action * p..(action + 1) * p]
            .iter()
            .zip(x)
            .map(|(t, v)| t * v)
            .sum();
        let nu = if self.spec.noise > 0.0 {
            rng.gen_range(-self.spec.noise..=self.spec.noise)
        } else {
            0.0
        };
        Sample::tagged(phi, mean + nu, action as u32)
    }
}

impl PopulationModel for BanditScenario {
    fn weight_names(&self) -> Vec<String> {
        self.spec.policies.iter().map(|p| p.name.clone()).collect()
    }

    fn loss(&self) -> LossSpec {
        self.loss_spec()
    }

    fn exact_risk(&self, _hypothesis: &Hypothesis, _weight_index: usize) -> Option<f64> {
        None
    }

    fn sample_target(&self, weight_index: usize, rng: &mut Rng) -> Sample {
        let x = self.draw_context(rng);
        let probs = self.spec.policies[weight_index]
            .policy
            .probabilities(self.spec.actions, &x);
        let a = Self::draw_action(&probs, rng);
        self.observe(&x, a, rng)
    }

    fn population_minimizer(&self, _weight_index: usize) -> Option<Hypothesis> {
        self.class().linear(self.theta.clone()).ok()
    }
}

impl Scenario for BanditScenario {
    fn name(&self) -> &'static str {
        "contextual-bandit"
    }

    fn build(&self, n: usize, seed: u64) -> Result<Instance> {
        if n == 0 {
            return Err(MroError::InvalidArgument("bandit needs n >= 1".into()));
        }
        let k = self.spec.actions;
        let mut rng = rng::seeded(seed);
        let m = self.spec.policies.len();
        let mut samples = Vec::with_capacity(n);
        let mut columns = vec![Vec::with_capacity(n); m];
        for i in 0..n {
            let x = self.draw_context(&mut rng);
            let mu = self.spec.logging.probabilities(k, &x);
            if let Some(a) = mu.iter().position(|&p| p < self.spec.floor) {
                return Err(MroError::InvalidArgument(format!(
                    "logging policy gives action {a} probability {} < floor {} at sample {i}",
                    mu[a], self.spec.floor
                )));
            }
            let a = Self::draw_action(&mu, &mut rng);
            for (col, named) in columns.iter_mut().zip(&self.spec.policies) {
                let pi = if named.policy == self.spec.logging {
                    mu[a]
                } else {
                    named.policy.probabilities(k, &x)[a]
                };
                col.push(pi / mu[a]);
            }
            samples.push(self.observe(&x, a, &mut rng));
        }
        let bounds: Vec<f64> = self
            .spec
            .policies
            .iter()
            .map(|p| self.weight_bound(&p.policy))
            .collect();
        let family = WeightFamily::from_bounds(self.weight_names(), bounds)?;
        let dataset = Dataset::new(samples, columns, self.weight_names())?.with_label_bound(self.label_bound())?;
        Ok(Instance {
            dataset,
            family,
            class: self.class(),
            loss: self.loss_spec(),
        })
    }

    fn default_population_mode(&self) -> PopulationMode {
        PopulationMode::MonteCarlo {
            samples: 200_000,
            seed: 0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(policies: Vec<NamedPolicy>) -> BanditSpec {
        BanditSpec {
            actions: 3,
            context_dim: 2,
            policies,
            logging: PolicySpec::Uniform,
            floor: 0.2,
            theta_star: None,
            noise: 0.1,
            radius: 1.0,
        }
    }

    fn greedy() -> PolicySpec {
        PolicySpec::Greedy {
            scores: vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, -1.0]],
        }
    }

    #[test]
    fn logging_policy_gives_unit_weights() {
        let s = BanditScenario::new(spec(vec![NamedPolicy {
            name: "log".into(),
            policy: PolicySpec::Uniform,
        }]))
        .unwrap();
        let inst = s.build(300, 1).unwrap();
        assert!(inst.dataset.column(0).iter().all(|&w| w == 1.0));
        assert_eq!(inst.family.bound(0), 1.0);
    }

    #[test]
    fn deterministic_policy_weights() {
        let s = BanditScenario::new(spec(vec![NamedPolicy {
            name: "greedy".into(),
            policy: greedy(),
        }]))
        .unwrap();
        let inst = s.build(300, 2).unwrap();
        assert!(inst
            .dataset
            .column(0)
            .iter()
            .all(|&w| w == 0.0 || (w - 3.0).abs() < 1e-12));
        assert!(inst
            .dataset
            .column(0)
            .iter()
            .all(|&w| w <= inst.family.bound(0) * (1.0 + 1e-12)));
    }

    #[test]
    fn floor_violation_is_reported() {
        let mut sp = spec(vec![NamedPolicy {
            name: "g".into(),
            policy: greedy(),
        }]);
        sp.logging = greedy();
        let s = BanditScenario::new(sp).unwrap();
        assert!(s.build(10, 0).is_err());
    }

    #[test]
    fn softmax_sums_to_one() {
        let p = PolicySpec::Softmax {
            scores: vec![vec![2.0, -1.0], vec![0.5, 0.5], vec![0.0, 3.0]],
            temperature: 0.7,
        };
        let probs = p.probabilities(3, &[0.3, -0.2]);
        assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }
}
