//! Two target distributions with different noise levels on the label.
//!
//! `P_1` is the point mass at `0.1`, `P_2` is `Bernoulli(1/2)`, and `P_0` is
//! their equal mixture with the component recorded as the sample tag. The
//! class is the two constants `{0.3, 0.6}` under squared loss. DRO prefers
//! `0.6` because `P_2` is noisy; MRO prefers `0.3`.

use rand::Rng as _;

use crate::class::{FunctionClass, Hypothesis};
use crate::data::{Dataset, Sample, WeightFamily};
use crate::error::{MroError, Result};
use crate::loss::LossSpec;
use crate::risk::PopulationModel;
use crate::rng::{self, Rng};

use super::{Instance, Scenario};

pub const CANDIDATES: [f64; 2] = [0.3, 0.6];
pub const POINT_MASS: f64 = 0.1;
pub const WEIGHT_BOUND: f64 = 2.0;

#[derive(Debug, Clone, Default)]
pub struct Prop1;

impl Prop1 {
    pub fn new() -> Self {
        Self
    }

    pub fn class() -> FunctionClass {
        FunctionClass::finite_constants(&CANDIDATES).expect("two finite constants")
    }

    pub fn loss() -> LossSpec {
        LossSpec::squared(1.0)
    }

    pub fn family() -> WeightFamily {
        WeightFamily::new(
            vec!["p1".into(), "p2".into()],
            vec![WEIGHT_BOUND, WEIGHT_BOUND],
            WEIGHT_BOUND,
        )
        .expect("valid family")
    }

    /// Four atoms of equal mass, `(0.1, P_1)` twice and `0`, `1` from `P_2`,
    /// whose empirical risks are the population risks.
    pub fn exact_twin() -> Instance {
        let samples = vec![
            Sample::tagged(vec![], POINT_MASS, 0),
            Sample::tagged(vec![], POINT_MASS, 0),
            Sample::tagged(vec![], 0.0, 1),
            Sample::tagged(vec![], 1.0, 1),
        ];
        let columns = vec![vec![2.0, 2.0, 0.0, 0.0], vec![0.0, 0.0, 2.0, 2.0]];
        let dataset = Dataset::new(samples, columns, vec!["p1".into(), "p2".into()])
            .and_then(|d| d.with_label_bound(1.0))
            .expect("valid twin");
        Instance {
            dataset,
            family: Self::family(),
            class: Self::class(),
            loss: Self::loss(),
        }
    }

    /// `R_i(c)` for a constant prediction `c`.
    pub fn risk_of_constant(c: f64, weight_index: usize) -> f64 {
        match weight_index {
            0 => (c - POINT_MASS) * (c - POINT_MASS),
            _ => 0.5 * c * c + 0.5 * (1.0 - c) * (1.0 - c),
        }
    }
}

/// Sampled dataset with `2 · n_per_component` mixture draws, plus the exact twin.
pub fn build_prop1(n_per_component: usize, seed: u64) -> Result<(Instance, Instance)> {
    let sampled = Prop1.build(2 * n_per_component, seed)?;
    Ok((sampled, Prop1::exact_twin()))
}

impl PopulationModel for Prop1 {
    fn weight_names(&self) -> Vec<String> {
        vec!["p1".into(), "p2".into()]
    }

    fn loss(&self) -> LossSpec {
        Self::loss()
    }

    fn exact_risk(&self, hypothesis: &Hypothesis, weight_index: usize) -> Option<f64> {
        hypothesis
            .constant_value()
            .map(|c| Self::risk_of_constant(c, weight_index))
    }

    fn sample_target(&self, weight_index: usize, rng: &mut Rng) -> Sample {
        match weight_index {
            0 => Sample::tagged(vec![], POINT_MASS, 0),
            _ => Sample::tagged(vec![], if rng.gen_bool(0.5) { 1.0 } else { 0.0 }, 1),
        }
    }

    fn population_minimizer(&self, weight_index: usize) -> Option<Hypothesis> {
        let class = Self::class();
        let members = class.members().ok()?;
        let mut best = 0;
        for i in 1..members.len() {
            if Self::risk_of_constant(CANDIDATES[i], weight_index)
                < Self::risk_of_constant(CANDIDATES[best], weight_index)
            {
                best = i;
            }
        }
        members.into_iter().nth(best)
    }
}

impl Scenario for Prop1 {
    fn name(&self) -> &'static str {
        "prop1"
    }

    /// `n` mixture draws; the component of each draw is a fair coin.
    fn build(&self, n: usize, seed: u64) -> Result<Instance> {
        if n == 0 {
            return Err(MroError::InvalidArgument("prop1 needs n >= 1".into()));
        }
        let mut rng = rng::seeded(seed);
        let mut samples = Vec::with_capacity(n);
        let mut columns = vec![Vec::with_capacity(n), Vec::with_capacity(n)];
        for _ in 0..n {
            let tag = usize::from(rng.gen_bool(0.5));
            samples.push(self.sample_target(tag, &mut rng));
            columns[0].push(if tag == 0 { WEIGHT_BOUND } else { 0.0 });
            columns[1].push(if tag == 1 { WEIGHT_BOUND } else { 0.0 });
        }
        let dataset = Dataset::new(samples, columns, self.weight_names())?.with_label_bound(1.0)?;
        Ok(Instance {
            dataset,
            family: Self::family(),
            class: Self::class(),
            loss: Self::loss(),
        })
    }
}
