//! Three hypotheses, two targets: the risk table where MRO and DRO disagree.
//!
//! ```text
//!        P_1      P_2
//! f_1    0        1
//! f_2    0.5      0.9
//! f_3    0.5+ε    0.4
//! ```

use serde::Serialize;

use crate::class::{FunctionClass, Predictor};
use crate::data::{Dataset, Sample, WeightFamily};
use crate::error::{MroError, Result};
use crate::loss::LossSpec;

use super::Instance;

pub const DEFAULT_EPSILON: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Example2 {
    pub epsilon: f64,
    /// `risk[f][w]`.
    pub risk: Vec<Vec<f64>>,
    /// `regret[f][w] = risk[f][w] - min_f risk[f][w]`.
    pub regret: Vec<Vec<f64>>,
    /// Index minimizing the worst-case regret.
    pub mro_selection: usize,
    /// Index minimizing the worst-case risk.
    pub dro_selection: usize,
}

impl Example2 {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon > 0.0 && epsilon < 0.1) {
            return Err(MroError::InvalidArgument(format!(
                "epsilon must lie in (0, 0.1), got {epsilon}"
            )));
        }
        let risk = vec![vec![0.0, 1.0], vec![0.5, 0.9], vec![0.5 + epsilon, 0.4]];
        let mins: Vec<f64> = (0..2)
            .map(|w| risk.iter().map(|r| r[w]).fold(f64::INFINITY, f64::min))
            .collect();
        let regret: Vec<Vec<f64>> = risk
            .iter()
            .map(|r| r.iter().zip(&mins).map(|(v, m)| v - m).collect())
            .collect();
        let mro_selection = argmin_of_max(&regret);
        let dro_selection = argmin_of_max(&risk);
        Ok(Self {
            epsilon,
            risk,
            regret,
            mro_selection,
            dro_selection,
        })
    }

    /// Dataset and class whose empirical risks are the table; see [`matrix_instance`].
    pub fn twin(&self) -> Result<Instance> {
        matrix_instance(&self.risk)
    }
}

/// A finite game with prescribed empirical risks `risk[f][w] ≥ 0`.
///
/// One atom per weight, all with label 0; weight `w` puts mass `|W|` on atom
/// `w`, and hypothesis `f` predicts `√risk[f][w]` there, so under squared loss
/// `R̂_w(f) = risk[f][w]` up to rounding.
pub fn matrix_instance(risk: &[Vec<f64>]) -> Result<Instance> {
    let m = risk.first().map_or(0, Vec::len);
    if m == 0 || risk.iter().any(|r| r.len() != m) {
        return Err(MroError::InvalidArgument(
            "risk table must be a nonempty rectangle".into(),
        ));
    }
    if risk.iter().flatten().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(MroError::InvalidArgument("risks must be finite and nonnegative".into()));
    }
    let samples = (0..m).map(|w| Sample::tagged(vec![], 0.0, w as u32)).collect();
    let columns = (0..m)
        .map(|w| (0..m).map(|i| if i == w { m as f64 } else { 0.0 }).collect())
        .collect();
    let names: Vec<String> = (0..m).map(|w| format!("p{}", w + 1)).collect();
    let dataset = Dataset::new(samples, columns, names.clone())?;
    let hypotheses = risk
        .iter()
        .map(|r| Predictor::Table {
            values: r.iter().map(|v| v.sqrt()).collect(),
        })
        .collect();
    let top = risk.iter().flatten().copied().fold(0.0, f64::max);
    Ok(Instance {
        dataset,
        family: WeightFamily::new(names, vec![m as f64; m], m as f64)?,
        class: FunctionClass::finite(hypotheses)?,
        loss: LossSpec::squared(if top > 0.0 { top } else { 1.0 }),
    })
}

fn argmin_of_max(table: &[Vec<f64>]) -> usize {
    let worst: Vec<f64> = table
        .iter()
        .map(|r| r.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let mut best = 0;
    for i in 1..worst.len() {
        if worst[i] < worst[best] {
            best = i;
        }
    }
    best
}
