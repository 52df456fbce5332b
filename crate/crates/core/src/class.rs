//! Function classes and hypotheses.
//!
//! Three classes ship: a finite list of predictors, constants in `[-C, C]`,
//! and linear predictors `x ↦ βᵀx` with `‖β‖₂ ≤ r`. Every [`Hypothesis`] is
//! checked against its class when it is constructed.

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Sample};
use crate::error::{MroError, Result};

/// Slack allowed on the ball constraint for iteratively computed solutions.
pub const BALL_TOLERANCE: f64 = 1e-8;

/// A concrete prediction rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Predictor {
    /// Ignores features.
    Constant { value: f64 },
    /// `βᵀx`.
    Linear { coefficients: Vec<f64> },
    /// Looks up `values[tag]`; used to encode arbitrary risk tables.
    Table { values: Vec<f64> },
}

impl Predictor {
    /// Prediction for `sample`. Callers check compatibility first with
    /// [`Predictor::check_compatible`].
    #[inline]
    pub fn predict(&self, sample: &Sample) -> f64 {
        match self {
            Predictor::Constant { value } => *value,
            Predictor::Linear { coefficients } => coefficients.iter().zip(&sample.features).map(|(b, x)| b * x).sum(),
            Predictor::Table { values } => sample
                .tag
                .and_then(|t| values.get(t as usize))
                .copied()
                .unwrap_or(f64::NAN),
        }
    }

    pub fn check_compatible(&self, dataset: &Dataset) -> Result<()> {
        match self {
            Predictor::Constant { .. } => Ok(()),
            Predictor::Linear { coefficients } => {
                if coefficients.len() != dataset.feature_dim() {
                    return Err(MroError::DimensionMismatch {
                        expected: dataset.feature_dim(),
                        got: coefficients.len(),
                    });
                }
                Ok(())
            }
            Predictor::Table { values } => {
                for (i, s) in dataset.samples().iter().enumerate() {
                    match s.tag {
                        Some(t) if (t as usize) < values.len() => {}
                        _ => {
                            return Err(MroError::InvalidArgument(format!(
                                "sample {i} has no table entry for tag {:?}",
                                s.tag
                            )))
                        }
                    }
                }
                Ok(())
            }
        }
    }

    fn is_finite(&self) -> bool {
        match self {
            Predictor::Constant { value } => value.is_finite(),
            Predictor::Linear { coefficients } => coefficients.iter().all(|v| v.is_finite()),
            Predictor::Table { values } => values.iter().all(|v| v.is_finite()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClassKind {
    Finite,
    IntervalConstant,
    LinearL2Ball,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FunctionClass {
    Finite { hypotheses: Vec<Predictor> },
    IntervalConstant { radius: f64 },
    LinearL2Ball { dim: usize, radius: f64 },
}

impl FunctionClass {
    pub fn finite(hypotheses: Vec<Predictor>) -> Result<Self> {
        let class = FunctionClass::Finite { hypotheses };
        class.validate()?;
        Ok(class)
    }

    /// Finite class of constant predictors.
    pub fn finite_constants(values: &[f64]) -> Result<Self> {
        Self::finite(values.iter().map(|&value| Predictor::Constant { value }).collect())
    }

    pub fn interval(radius: f64) -> Result<Self> {
        let class = FunctionClass::IntervalConstant { radius };
        class.validate()?;
        Ok(class)
    }

    pub fn linear_ball(dim: usize, radius: f64) -> Result<Self> {
        let class = FunctionClass::LinearL2Ball { dim, radius };
        class.validate()?;
        Ok(class)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            FunctionClass::Finite { hypotheses } => {
                if hypotheses.is_empty() {
                    return Err(MroError::InvalidClass("finite class is empty".into()));
                }
                if let Some(i) = hypotheses.iter().position(|p| !p.is_finite()) {
                    return Err(MroError::NonFinite(format!("finite class member {i}")));
                }
                Ok(())
            }
            FunctionClass::IntervalConstant { radius } | FunctionClass::LinearL2Ball { radius, .. } => {
                if radius.is_finite() && *radius > 0.0 {
                    Ok(())
                } else {
                    Err(MroError::InvalidClass(format!("radius must be positive, got {radius}")))
                }
            }
        }
    }

    pub fn kind(&self) -> ClassKind {
        match self {
            FunctionClass::Finite { .. } => ClassKind::Finite,
            FunctionClass::IntervalConstant { .. } => ClassKind::IntervalConstant,
            FunctionClass::LinearL2Ball { .. } => ClassKind::LinearL2Ball,
        }
    }

    /// Number of members of a finite class, `None` otherwise.
    pub fn size(&self) -> Option<usize> {
        match self {
            FunctionClass::Finite { hypotheses } => Some(hypotheses.len()),
            _ => None,
        }
    }

    /// The `index`-th member of a finite class.
    pub fn member(&self, index: usize) -> Result<Hypothesis> {
        match self {
            FunctionClass::Finite { hypotheses } => {
                let predictor = hypotheses
                    .get(index)
                    .ok_or(MroError::IndexOutOfRange {
                        index,
                        len: hypotheses.len(),
                    })?
                    .clone();
                Ok(Hypothesis {
                    kind: ClassKind::Finite,
                    index: Some(index),
                    predictor,
                })
            }
            _ => Err(MroError::Unsupported("member() on an infinite class".into())),
        }
    }

    pub fn members(&self) -> Result<Vec<Hypothesis>> {
        let n = self
            .size()
            .ok_or_else(|| MroError::Unsupported("members() on an infinite class".into()))?;
        (0..n).map(|i| self.member(i)).collect()
    }

    /// Constant hypothesis `c` of the interval class; rejects `|c| > C`.
    pub fn constant(&self, value: f64) -> Result<Hypothesis> {
        match self {
            FunctionClass::IntervalConstant { radius } => {
                if !value.is_finite() || value.abs() > *radius {
                    return Err(MroError::ConstraintViolation(format!("|{value}| > C = {radius}")));
                }
                Ok(Hypothesis {
                    kind: ClassKind::IntervalConstant,
                    index: None,
                    predictor: Predictor::Constant { value },
                })
            }
            _ => Err(MroError::Unsupported("constant() requires the interval class".into())),
        }
    }

    /// Linear hypothesis `β` of the ball class; rejects `‖β‖₂ > r + tolerance`.
    pub fn linear(&self, coefficients: Vec<f64>) -> Result<Hypothesis> {
        match self {
            FunctionClass::LinearL2Ball { dim, radius } => {
                if coefficients.len() != *dim {
                    return Err(MroError::DimensionMismatch {
                        expected: *dim,
                        got: coefficients.len(),
                    });
                }
                if coefficients.iter().any(|v| !v.is_finite()) {
                    return Err(MroError::NonFinite("linear coefficients".into()));
                }
                let norm = coefficients.iter().map(|b| b * b).sum::<f64>().sqrt();
                if norm > radius + BALL_TOLERANCE {
                    return Err(MroError::ConstraintViolation(format!("‖β‖ = {norm} > r = {radius}")));
                }
                Ok(Hypothesis {
                    kind: ClassKind::LinearL2Ball,
                    index: None,
                    predictor: Predictor::Linear { coefficients },
                })
            }
            _ => Err(MroError::Unsupported(
                "linear() requires the linear-l2-ball class".into(),
            )),
        }
    }

    /// Checks that members of this class can be evaluated on `dataset`.
    pub fn check_compatible(&self, dataset: &Dataset) -> Result<()> {
        match self {
            FunctionClass::Finite { hypotheses } => hypotheses.iter().try_for_each(|p| p.check_compatible(dataset)),
            FunctionClass::IntervalConstant { .. } => Ok(()),
            FunctionClass::LinearL2Ball { dim, .. } => {
                if *dim != dataset.feature_dim() {
                    return Err(MroError::DimensionMismatch {
                        expected: *dim,
                        got: dataset.feature_dim(),
                    });
                }
                Ok(())
            }
        }
    }
}

/// A member of a [`FunctionClass`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hypothesis {
    kind: ClassKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    index: Option<usize>,
    predictor: Predictor,
}

impl Hypothesis {
    pub fn kind(&self) -> ClassKind {
        self.kind
    }

    /// Index within a finite class.
    pub fn index(&self) -> Option<usize> {
        self.index
    }

    pub fn predictor(&self) -> &Predictor {
        &self.predictor
    }

    #[inline]
    pub fn predict(&self, sample: &Sample) -> f64 {
        self.predictor.predict(sample)
    }

    /// The constant value for constant predictors.
    pub fn constant_value(&self) -> Option<f64> {
        match &self.predictor {
            Predictor::Constant { value } => Some(*value),
            _ => None,
        }
    }

    pub fn coefficients(&self) -> Option<&[f64]> {
        match &self.predictor {
            Predictor::Linear { coefficients } => Some(coefficients),
            _ => None,
        }
    }

    /// Parameters as a flat vector: the index, constant, or coefficients.
    pub fn parameters(&self) -> Vec<f64> {
        if let Some(i) = self.index {
            return vec![i as f64];
        }
        match &self.predictor {
            Predictor::Constant { value } => vec![*value],
            Predictor::Linear { coefficients } => coefficients.clone(),
            Predictor::Table { values } => values.clone(),
        }
    }

    pub fn check_compatible(&self, dataset: &Dataset) -> Result<()> {
        self.predictor.check_compatible(dataset)
    }
}
