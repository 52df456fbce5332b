use serde::{Deserialize, Serialize};

use crate::error::{MroError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossKind {
    Squared,
    Absolute,
    /// Squared error truncated at the declared bound.
    CustomBounded,
}

/// A pointwise loss `ℓ(y, ŷ)` with a declared range `[0, bound]` and
/// Lipschitz constant.
///
/// The bound is declared rather than inferred; it only feeds the default
/// step size and the payoff range of the game.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawLoss", deny_unknown_fields)]
pub struct LossSpec {
    pub kind: LossKind,
    pub bound: f64,
    pub lipschitz: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLoss {
    kind: LossKind,
    bound: f64,
    #[serde(default = "one")]
    lipschitz: f64,
}

fn one() -> f64 {
    1.0
}

impl TryFrom<RawLoss> for LossSpec {
    type Error = MroError;

    fn try_from(raw: RawLoss) -> Result<Self> {
        LossSpec::new(raw.kind, raw.bound, raw.lipschitz)
    }
}

impl LossSpec {
    pub fn new(kind: LossKind, bound: f64, lipschitz: f64) -> Result<Self> {
        if !(bound.is_finite() && bound > 0.0) {
            return Err(MroError::InvalidArgument(format!(
                "loss bound must be positive, got {bound}"
            )));
        }
        if !(lipschitz.is_finite() && lipschitz >= 0.0) {
            return Err(MroError::InvalidArgument(format!(
                "invalid Lipschitz constant {lipschitz}"
            )));
        }
        Ok(Self { kind, bound, lipschitz })
    }

    /// Squared loss `(ŷ - y)²` with the given declared bound.
    pub fn squared(bound: f64) -> Self {
        Self::new(LossKind::Squared, bound, 2.0 * bound.sqrt()).expect("positive bound")
    }

    #[inline]
    pub fn eval(&self, label: f64, prediction: f64) -> f64 {
        let r = prediction - label;
        match self.kind {
            LossKind::Squared => r * r,
            LossKind::Absolute => r.abs(),
            LossKind::CustomBounded => (r * r).min(self.bound),
        }
    }

    pub fn is_squared(&self) -> bool {
        self.kind == LossKind::Squared
    }
}
