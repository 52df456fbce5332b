//! Worst-case regret over the continuous family of bounded importance
//! weights `{w : 0 ≤ w ≤ B, E_{P_0}[w] = 1}`.
//!
//! For a fixed comparator `f'` the supremum over weights is the dual
//! `inf_η η + B·E[(d - η)_+]` with `d = ℓ(f) - ℓ(f')`; the outer supremum over
//! `f'` runs over the candidate class.

use crate::class::{FunctionClass, Hypothesis};
use crate::data::Dataset;
use crate::error::{MroError, Result};
use crate::loss::LossSpec;

const GRID_POINTS: usize = 401;
const GOLDEN_ITERS: usize = 120;

/// `inf_η η + (B/n) Σ_i (d_i - η)_+` and the minimizing `η`.
///
/// The infimum is attained at the `k`-th smallest difference with
/// `k = max(1, ⌈n(1 - 1/B)⌉)`, the smallest minimizing order statistic.
pub fn bounded_weight_dual(differences: &[f64], bound: f64) -> Result<(f64, f64)> {
    if !(bound >= 1.0) {
        return Err(MroError::InvalidArgument(format!(
            "weight bound must be >= 1, got {bound}"
        )));
    }
    if differences.is_empty() {
        return Err(MroError::InvalidArgument("no samples".into()));
    }
    if differences.iter().any(|d| !d.is_finite()) {
        return Err(MroError::NonFinite("loss difference".into()));
    }
    let n = differences.len();
    let mut sorted = differences.to_vec();
    sorted.sort_by(f64::total_cmp);
    let target = n as f64 * (1.0 - 1.0 / bound);
    // guard the ceiling against round-off just above an integer
    let k = ((target - 1e-9).ceil().max(1.0) as usize).min(n);
    let eta = sorted[k - 1];
    let hinge: f64 = sorted.iter().map(|d| (d - eta).max(0.0)).sum();
    Ok((eta + bound * hinge / n as f64, eta))
}

fn regret_against(
    hypothesis: &Hypothesis,
    comparator: &Hypothesis,
    dataset: &Dataset,
    loss: &LossSpec,
    bound: f64,
) -> Result<f64> {
    let diffs: Vec<f64> = dataset
        .samples()
        .iter()
        .map(|s| loss.eval(s.label, hypothesis.predict(s)) - loss.eval(s.label, comparator.predict(s)))
        .collect();
    bounded_weight_dual(&diffs, bound).map(|(v, _)| v)
}

/// `sup_{f' ∈ F} inf_η {η + B·Ê[(ℓ(f) - ℓ(f') - η)_+]}` on the empirical `P_0`.
///
/// Finite classes are enumerated. For the interval class the comparator is
/// searched on a uniform grid over `[-C, C]` and refined by golden-section
/// search around the best grid point.
pub fn worst_case_regret_bounded_family(
    hypothesis: &Hypothesis,
    dataset: &Dataset,
    loss: &LossSpec,
    candidate_class: &FunctionClass,
    bound: f64,
) -> Result<f64> {
    if !(bound >= 1.0) {
        return Err(MroError::InvalidArgument(format!(
            "weight bound must be >= 1, got {bound}"
        )));
    }
    hypothesis.check_compatible(dataset)?;
    match candidate_class {
        FunctionClass::Finite { .. } => {
            let mut best = f64::NEG_INFINITY;
            for comparator in candidate_class.members()? {
                comparator.check_compatible(dataset)?;
                best = best.max(regret_against(hypothesis, &comparator, dataset, loss, bound)?);
            }
            Ok(best)
        }
        FunctionClass::IntervalConstant { radius } => {
            let value_at = |c: f64| -> Result<f64> {
                let comparator = candidate_class.constant(c.clamp(-radius, *radius))?;
                regret_against(hypothesis, &comparator, dataset, loss, bound)
            };
            let step = 2.0 * radius / (GRID_POINTS - 1) as f64;
            let mut best = (f64::NEG_INFINITY, 0.0);
            for i in 0..GRID_POINTS {
                let c = -radius + step * i as f64;
                let v = value_at(c)?;
                if v > best.0 {
                    best = (v, c);
                }
            }
            let (mut lo, mut hi) = ((best.1 - step).max(-radius), (best.1 + step).min(*radius));
            let ratio = (5f64.sqrt() - 1.0) / 2.0;
            let mut a = hi - ratio * (hi - lo);
            let mut b = lo + ratio * (hi - lo);
            let (mut fa, mut fb) = (value_at(a)?, value_at(b)?);
            for _ in 0..GOLDEN_ITERS {
                if fa >= fb {
                    hi = b;
                    b = a;
                    fb = fa;
                    a = hi - ratio * (hi - lo);
                    fa = value_at(a)?;
                } else {
                    lo = a;
                    a = b;
                    fa = fb;
                    b = lo + ratio * (hi - lo);
                    fb = value_at(b)?;
                }
            }
            Ok(best.0.max(fa).max(fb))
        }
        FunctionClass::LinearL2Ball { .. } => Err(MroError::Unsupported(
            "bounded-family regret needs a finite or interval comparator class".into(),
        )),
    }
}
