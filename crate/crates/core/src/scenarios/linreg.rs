//! Well-specified linear regression under covariate shift.
//!
//! Covariates are `x = u/√d` with `u` uniform on `[-1, 1]^d`, so `‖x‖₂ ≤ 1`
//! and `Σ_0 = I/(3d)`. Labels are `y = xᵀβ* + ν` with `ν` uniform on
//! `[-h, h]`. The family holds `w_0 ≡ 1` and one slab shift
//! `w_s(x) = B·1{u_1 > 1 - 2/B}`, the density ratio of `u_1` conditioned on
//! its top `1/B` quantile. Both targets share the minimizer `β*`, and
//! `R_w(β) = (β - β*)ᵀ Σ_w (β - β*) + h²/3`.

use rand::Rng as _;

use crate::class::{FunctionClass, Hypothesis};
use crate::data::{Dataset, Sample, WeightFamily};
use crate::error::{MroError, Result};
use crate::loss::LossSpec;
use crate::risk::PopulationModel;
use crate::rng::{self, Rng};

use super::{Instance, Scenario};

pub fn default_shift_bound() -> f64 {
    20.0
}

pub fn default_noise() -> f64 {
    0.5
}

/// `β*` with alternating signs and norm `0.8`.
pub fn default_beta_star(dim: usize) -> Vec<f64> {
    let scale = 0.8 / (dim.max(1) as f64).sqrt();
    (0..dim).map(|i| if i % 2 == 0 { scale } else { -scale }).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinregCovshift {
    pub beta_star: Vec<f64>,
    /// `B` of the slab weight.
    pub shift_bound: f64,
    /// Half-width `h` of the label noise.
    pub noise: f64,
}

impl LinregCovshift {
    pub fn new(beta_star: Vec<f64>, shift_bound: f64, noise: f64) -> Result<Self> {
        if beta_star.is_empty() {
            return Err(MroError::InvalidArgument("linreg-covshift needs d >= 1".into()));
        }
        let norm = beta_star.iter().map(|b| b * b).sum::<f64>().sqrt();
        if !(norm.is_finite() && norm <= 1.0) {
            return Err(MroError::InvalidArgument(format!("‖β*‖ = {norm} must be at most 1")));
        }
        if !(shift_bound.is_finite() && shift_bound >= 1.0) {
            return Err(MroError::InvalidArgument(format!(
                "shift bound must be >= 1, got {shift_bound}"
            )));
        }
        if !(noise.is_finite() && noise >= 0.0) {
            return Err(MroError::InvalidArgument(format!(
                "noise half-width must be >= 0, got {noise}"
            )));
        }
        Ok(Self {
            beta_star,
            shift_bound,
            noise,
        })
    }

    pub fn dim(&self) -> usize {
        self.beta_star.len()
    }

    /// Lower edge `a = 1 - 2/B` of the slab on `u_1`.
    pub fn slab_edge(&self) -> f64 {
        1.0 - 2.0 / self.shift_bound
    }

    pub fn label_bound(&self) -> f64 {
        1.0 + self.noise
    }

    pub fn class(&self) -> FunctionClass {
        FunctionClass::linear_ball(self.dim(), 1.0).expect("valid dimension")
    }

    /// `(|y| + |βᵀx|)² ≤ (1 + h + 1)²`.
    pub fn loss_spec(&self) -> LossSpec {
        LossSpec::squared((self.label_bound() + 1.0).powi(2))
    }

    pub fn shift_weight(&self, u1: f64) -> f64 {
        if u1 > self.slab_edge() {
            self.shift_bound
        } else {
            0.0
        }
    }

    /// `Σ_w` (diagonal plus the `(0, 0)` entry; off-diagonals vanish).
    fn covariance_diagonal(&self, weight_index: usize) -> Vec<f64> {
        let d = self.dim() as f64;
        let mut diag = vec![1.0 / (3.0 * d); self.dim()];
        if weight_index == 1 && self.shift_bound > 1.0 {
            let a = self.slab_edge();
            diag[0] = (1.0 + a + a * a) / (3.0 * d);
        }
        diag
    }

    /// `‖β - β*‖²_{Σ_w}`.
    pub fn excess_risk(&self, beta: &[f64], weight_index: usize) -> f64 {
        self.covariance_diagonal(weight_index)
            .iter()
            .zip(beta.iter().zip(&self.beta_star))
            .map(|(s, (b, t))| s * (b - t) * (b - t))
            .sum()
    }

    fn draw_u(&self, weight_index: usize, rng: &mut Rng) -> Vec<f64> {
        let mut u: Vec<f64> = (0..self.dim()).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        if weight_index == 1 && self.shift_bound > 1.0 {
            u[0] = rng.gen_range(self.slab_edge()..=1.0);
        }
        u
    }

    fn label(&self, x: &[f64], rng: &mut Rng) -> f64 {
        let signal: f64 = x.iter().zip(&self.beta_star).map(|(a, b)| a * b).sum();
        let nu = if self.noise > 0.0 {
            rng.gen_range(-self.noise..=self.noise)
        } else {
            0.0
        };
        signal + nu
    }
}

impl PopulationModel for LinregCovshift {
    fn weight_names(&self) -> Vec<String> {
        vec!["w0".into(), "slab".into()]
    }

    fn loss(&self) -> LossSpec {
        self.loss_spec()
    }

    fn exact_risk(&self, hypothesis: &Hypothesis, weight_index: usize) -> Option<f64> {
        let beta = hypothesis.coefficients()?;
        if beta.len() != self.dim() {
            return None;
        }
        Some(self.excess_risk(beta, weight_index) + self.noise * self.noise / 3.0)
    }

    fn sample_target(&self, weight_index: usize, rng: &mut Rng) -> Sample {
        let scale = 1.0 / (self.dim() as f64).sqrt();
        let x: Vec<f64> = self.draw_u(weight_index, rng).iter().map(|u| u * scale).collect();
        let y = self.label(&x, rng);
        Sample::new(x, y)
    }

    fn population_minimizer(&self, _weight_index: usize) -> Option<Hypothesis> {
        self.class().linear(self.beta_star.clone()).ok()
    }
}

impl Scenario for LinregCovshift {
    fn name(&self) -> &'static str {
        "linreg-covshift"
    }

    fn build(&self, n: usize, seed: u64) -> Result<Instance> {
        if n == 0 {
            return Err(MroError::InvalidArgument("linreg-covshift needs n >= 1".into()));
        }
        let mut rng = rng::seeded(seed);
        let scale = 1.0 / (self.dim() as f64).sqrt();
        let mut samples = Vec::with_capacity(n);
        let mut shift = Vec::with_capacity(n);
        for _ in 0..n {
            let u = self.draw_u(0, &mut rng);
            let x: Vec<f64> = u.iter().map(|v| v * scale).collect();
            let y = self.label(&x, &mut rng);
            shift.push(self.shift_weight(u[0]));
            samples.push(Sample::new(x, y));
        }
        let family = WeightFamily::new(self.weight_names(), vec![1.0, self.shift_bound], self.shift_bound)?;
        let dataset = Dataset::new(samples, vec![vec![1.0; n], shift], self.weight_names())?
            .with_label_bound(self.label_bound())?;
        if dataset.column(1).iter().all(|&v| v == 0.0) {
            return Err(MroError::InvalidWeight {
                name: "slab".into(),
                row: 0,
                reason: "no sample fell in the shifted slab".into(),
            });
        }
        Ok(Instance {
            dataset,
            family,
            class: self.class(),
            loss: self.loss_spec(),
        })
    }
}
