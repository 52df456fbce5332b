//! Two shifted-mean targets where DRO converges at the slow rate.
//!
//! `P_i` draws `x = μ_i + ε` with `ε = ±1` equiprobable, tagged with `i`.
//! `P_0` is the equal mixture. The weights are the tag indicators rescaled
//! to empirical mean one, and the class is the constants in `[-C, C]`, so
//! `R_i(f) = (f - μ_i)² + 1`.

use rand::Rng as _;

use crate::class::{FunctionClass, Hypothesis};
use crate::data::{validate_dataset, Dataset, Sample, WeightFamily};
use crate::error::{MroError, Result};
use crate::loss::LossSpec;
use crate::risk::PopulationModel;
use crate::rng::{self, Rng};

use super::{Instance, Scenario};

pub fn default_mu1() -> f64 {
    1.5
}

pub fn default_mu2() -> f64 {
    0.5
}

pub fn default_radius() -> f64 {
    2.0
}

#[derive(Debug, Clone, PartialEq)]
pub struct DroSlow {
    pub mu: [f64; 2],
    pub radius: f64,
}

impl Default for DroSlow {
    fn default() -> Self {
        Self {
            mu: [default_mu1(), default_mu2()],
            radius: default_radius(),
        }
    }
}

impl DroSlow {
    pub fn new(mu1: f64, mu2: f64, radius: f64) -> Result<Self> {
        if !(mu1.is_finite() && mu2.is_finite() && radius.is_finite() && radius > 0.0) {
            return Err(MroError::InvalidArgument(
                "dro-slow parameters must be finite with C > 0".into(),
            ));
        }
        if radius < mu1 + mu2 || radius < mu1.abs().max(mu2.abs()) {
            return Err(MroError::InvalidArgument(format!(
                "C = {radius} is too small for means {mu1}, {mu2}"
            )));
        }
        Ok(Self { mu: [mu1, mu2], radius })
    }

    /// `Δ_μ = |μ_1 - μ_2|`.
    pub fn gap(&self) -> f64 {
        (self.mu[0] - self.mu[1]).abs()
    }

    pub fn class(&self) -> FunctionClass {
        FunctionClass::interval(self.radius).expect("validated radius")
    }

    /// `(C + max|x|)²`.
    pub fn loss_spec(&self) -> LossSpec {
        let max_label = self.mu[0].abs().max(self.mu[1].abs()) + 1.0;
        LossSpec::squared((self.radius + max_label).powi(2))
    }

    /// `argmin_f max_i R_i(f) = (μ_1 + μ_2)/2`.
    pub fn dro_solution(&self) -> f64 {
        0.5 * (self.mu[0] + self.mu[1])
    }

    pub fn risk_of_constant(&self, c: f64, weight_index: usize) -> f64 {
        let d = c - self.mu[weight_index];
        d * d + 1.0
    }
}

impl PopulationModel for DroSlow {
    fn weight_names(&self) -> Vec<String> {
        vec!["p1".into(), "p2".into()]
    }

    fn loss(&self) -> LossSpec {
        self.loss_spec()
    }

    fn exact_risk(&self, hypothesis: &Hypothesis, weight_index: usize) -> Option<f64> {
        hypothesis
            .constant_value()
            .map(|c| self.risk_of_constant(c, weight_index))
    }

    fn sample_target(&self, weight_index: usize, rng: &mut Rng) -> Sample {
        let noise = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        Sample::tagged(vec![], self.mu[weight_index] + noise, weight_index as u32)
    }

    fn population_minimizer(&self, weight_index: usize) -> Option<Hypothesis> {
        self.class().constant(self.mu[weight_index]).ok()
    }

    /// `1 + Δ_μ²/4`.
    fn robust_risk_optimum(&self) -> Option<f64> {
        Some(1.0 + self.gap() * self.gap() / 4.0)
    }
}

impl Scenario for DroSlow {
    fn name(&self) -> &'static str {
        "dro-slow"
    }

    fn build(&self, n: usize, seed: u64) -> Result<Instance> {
        if n < 2 {
            return Err(MroError::InvalidArgument("dro-slow needs n >= 2".into()));
        }
        let mut rng = rng::seeded(seed);
        let mut samples = Vec::with_capacity(n);
        let mut columns = vec![Vec::with_capacity(n), Vec::with_capacity(n)];
        for _ in 0..n {
            let tag = usize::from(rng.gen_bool(0.5));
            samples.push(self.sample_target(tag, &mut rng));
            columns[0].push(if tag == 0 { 1.0 } else { 0.0 });
            columns[1].push(if tag == 1 { 1.0 } else { 0.0 });
        }
        let raw = Dataset::new(samples, columns, self.weight_names())?;
        let indicators = WeightFamily::new(self.weight_names(), vec![1.0, 1.0], 1.0)?;
        // rescaling by n / n_i fails loudly if a component drew no samples
        let validated = validate_dataset(&raw, &indicators, true)?;
        let label_bound = self.mu[0].abs().max(self.mu[1].abs()) + 1.0;
        Ok(Instance {
            dataset: validated.dataset.with_label_bound(label_bound)?,
            family: validated.family,
            class: self.class(),
            loss: self.loss_spec(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::risk::{population_risk_estimate, PopulationMode};

    #[test]
    fn closed_forms() {
        let s = DroSlow::default();
        assert_eq!(s.dro_solution(), 1.0);
        let f = s.class().constant(s.dro_solution()).unwrap();
        let worst = (0..2).map(|w| s.exact_risk(&f, w).unwrap()).fold(0.0, f64::max);
        assert!((worst - 1.25).abs() < 1e-15);
        assert_eq!(s.robust_risk_optimum(), Some(1.25));
        let at_mu1 = s.class().constant(1.5).unwrap();
        assert_eq!(s.exact_risk(&at_mu1, 0), Some(1.0));
        assert_eq!(s.exact_risk(&at_mu1, 1), Some(2.0));
        assert_eq!(s.loss_spec().bound, 20.25);
        assert!(DroSlow::new(1.5, 0.5, 1.9).is_err());
    }

    #[test]
    fn renormalized_columns() {
        let s = DroSlow::default();
        let inst = s.build(500, 3).unwrap();
        for w in 0..2 {
            assert!((inst.dataset.column_mean(w) - 1.0).abs() < 1e-12);
            let b = inst.family.bound(w);
            assert!(inst
                .dataset
                .column(w)
                .iter()
                .all(|&v| v == 0.0 || (v - b).abs() < 1e-12));
        }
    }

    #[test]
    fn monte_carlo_agrees() {
        let s = DroSlow::default();
        let f = s.class().constant(0.7).unwrap();
        for w in 0..2 {
            let e = population_risk_estimate(
                &f,
                &s,
                w,
                PopulationMode::MonteCarlo {
                    samples: 20_000,
                    seed: 5,
                },
            )
            .unwrap();
            let exact = s.exact_risk(&f, w).unwrap();
            assert!((e.value - exact).abs() < 5.0 * e.std_error.max(1e-12));
        }
    }
}
