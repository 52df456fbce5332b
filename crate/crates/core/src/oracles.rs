//! Weighted empirical risk minimization oracles.
//!
//! The free functions ([`erm_finite`], [`erm_interval_mean`],
//! [`erm_linear_l2`]) solve one request with explicit per-sample weights
//! `ω_i`. The [`ErmOracle`] implementations bind a dataset and answer the
//! game solver's repeated queries, where `ω = Σ_w a_w · W[:, w]` for
//! coefficients `a` over the weight family.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::class::{ClassKind, FunctionClass, Hypothesis};
use crate::data::Dataset;
use crate::error::{MroError, Result};
use crate::loss::LossSpec;
use crate::risk::weighted_risk;

/// Optimization tolerance of the iterative (linear) oracle.
pub const ORACLE_TOLERANCE: f64 = 1e-8;

/// One weighted ERM problem: `min_f (1/n) Σ_i ω_i ℓ(y_i, f(x_i))`.
#[derive(Debug, Clone, Copy)]
pub struct ErmRequest<'a> {
    pub per_sample_weights: &'a [f64],
    pub dataset: &'a Dataset,
    pub loss: &'a LossSpec,
    pub class: &'a FunctionClass,
    pub tolerance: f64,
}

impl<'a> ErmRequest<'a> {
    pub fn new(
        per_sample_weights: &'a [f64],
        dataset: &'a Dataset,
        loss: &'a LossSpec,
        class: &'a FunctionClass,
    ) -> Self {
        Self {
            per_sample_weights,
            dataset,
            loss,
            class,
            tolerance: ORACLE_TOLERANCE,
        }
    }

    fn check(&self) -> Result<()> {
        if self.per_sample_weights.len() != self.dataset.len() {
            return Err(MroError::DimensionMismatch {
                expected: self.dataset.len(),
                got: self.per_sample_weights.len(),
            });
        }
        if let Some(i) = self
            .per_sample_weights
            .iter()
            .position(|w| !(w.is_finite() && *w >= 0.0))
        {
            return Err(MroError::Oracle(format!(
                "per-sample weight {i} is {}",
                self.per_sample_weights[i]
            )));
        }
        if !self.per_sample_weights.iter().any(|&w| w > 0.0) {
            return Err(MroError::Oracle("all per-sample weights are zero".into()));
        }
        Ok(())
    }
}

/// Dispatches on the class kind.
pub fn erm(request: &ErmRequest<'_>) -> Result<Hypothesis> {
    match request.class.kind() {
        ClassKind::Finite => erm_finite(request),
        ClassKind::IntervalConstant => erm_interval_mean(request),
        ClassKind::LinearL2Ball => erm_linear_l2(request),
    }
}

/// Exhaustive search over a finite class; ties go to the lowest index.
pub fn erm_finite(request: &ErmRequest<'_>) -> Result<Hypothesis> {
    request.check()?;
    let members = request.class.members()?;
    let mut best: Option<(usize, f64)> = None;
    for (i, h) in members.iter().enumerate() {
        h.check_compatible(request.dataset)?;
        let risk = weighted_risk(h, request.per_sample_weights, request.dataset, request.loss);
        if !risk.is_finite() {
            return Err(MroError::NonFinite(format!("risk of class member {i}")));
        }
        if best.is_none_or(|(_, r)| risk < r) {
            best = Some((i, risk));
        }
    }
    let (index, _) = best.ok_or_else(|| MroError::InvalidClass("finite class is empty".into()))?;
    request.class.member(index)
}

/// Weighted label mean clipped to `[-C, C]` (squared loss only).
pub fn erm_interval_mean(request: &ErmRequest<'_>) -> Result<Hypothesis> {
    request.check()?;
    let FunctionClass::IntervalConstant { radius } = request.class else {
        return Err(MroError::Unsupported(
            "erm_interval_mean needs the interval class".into(),
        ));
    };
    if !request.loss.is_squared() {
        return Err(MroError::Unsupported("erm_interval_mean needs squared loss".into()));
    }
    let (mut sw, mut swy) = (0.0, 0.0);
    for (w, s) in request.per_sample_weights.iter().zip(request.dataset.samples()) {
        sw += w;
        swy += w * s.label;
    }
    clipped_mean(swy, sw, *radius).and_then(|c| request.class.constant(c))
}

fn clipped_mean(weighted_sum: f64, total_weight: f64, radius: f64) -> Result<f64> {
    if total_weight <= 0.0 {
        return Err(MroError::Oracle("total weight is zero".into()));
    }
    let mean = weighted_sum / total_weight;
    if !mean.is_finite() {
        return Err(MroError::NonFinite("weighted label mean".into()));
    }
    Ok(mean.clamp(-radius, radius))
}

/// Weighted least squares over `‖β‖₂ ≤ r` (squared loss only).
pub fn erm_linear_l2(request: &ErmRequest<'_>) -> Result<Hypothesis> {
    request.check()?;
    let FunctionClass::LinearL2Ball { radius, .. } = request.class else {
        return Err(MroError::Unsupported(
            "erm_linear_l2 needs the linear-l2-ball class".into(),
        ));
    };
    if !request.loss.is_squared() {
        return Err(MroError::Unsupported("erm_linear_l2 needs squared loss".into()));
    }
    request.class.check_compatible(request.dataset)?;
    let stats = LinearStats::from_weights(request.dataset, request.per_sample_weights);
    let solution = constrained_least_squares(&stats.gram, &stats.moment, *radius, request.tolerance)?;
    request.class.linear(solution.beta.iter().copied().collect())
}

/// Solution of `min_β βᵀGβ - 2bᵀβ` subject to `‖β‖₂ ≤ r`.
#[derive(Debug, Clone)]
pub struct LinearSolution {
    pub beta: DVector<f64>,
    /// Multiplier `λ ≥ 0` with `(G + λI)β = b` and `λ(‖β‖ - r) = 0`.
    pub multiplier: f64,
}

/// Ball-constrained least squares through the eigendecomposition of `G`.
///
/// The interior candidate is the minimal-norm solution `G⁺b`. If it lies
/// outside the ball, `‖(G + λI)⁻¹b‖` is strictly decreasing in `λ > 0` and
/// the multiplier is found by bisection; the returned `β` is on the feasible
/// side of the bracket.
pub fn constrained_least_squares(
    gram: &DMatrix<f64>,
    moment: &DVector<f64>,
    radius: f64,
    tolerance: f64,
) -> Result<LinearSolution> {
    let d = moment.len();
    if gram.nrows() != d || gram.ncols() != d {
        return Err(MroError::DimensionMismatch {
            expected: d,
            got: gram.nrows(),
        });
    }
    if gram.iter().chain(moment.iter()).any(|v| !v.is_finite()) {
        return Err(MroError::NonFinite("least-squares system".into()));
    }
    if d == 0 {
        return Ok(LinearSolution {
            beta: DVector::zeros(0),
            multiplier: 0.0,
        });
    }
    let eig = SymmetricEigen::new(gram.clone());
    let coords = eig.eigenvectors.transpose() * moment;
    let top = eig.eigenvalues.iter().copied().fold(0.0_f64, |a, b| a.max(b.abs()));
    let cutoff = top * 1e-12 * d as f64;

    let norm_sq_at = |lambda: f64| -> f64 {
        coords
            .iter()
            .zip(eig.eigenvalues.iter())
            .map(|(c, &e)| {
                let denom = e.max(0.0) + lambda;
                if lambda == 0.0 && e <= cutoff {
                    0.0
                } else {
                    (c / denom).powi(2)
                }
            })
            .sum()
    };
    let beta_at = |lambda: f64| -> DVector<f64> {
        let scaled = DVector::from_iterator(
            d,
            coords.iter().zip(eig.eigenvalues.iter()).map(|(c, &e)| {
                if lambda == 0.0 && e <= cutoff {
                    0.0
                } else {
                    c / (e.max(0.0) + lambda)
                }
            }),
        );
        &eig.eigenvectors * scaled
    };

    let r_sq = radius * radius;
    if norm_sq_at(0.0) <= r_sq {
        return Ok(LinearSolution {
            beta: beta_at(0.0),
            multiplier: 0.0,
        });
    }

    // ‖β(λ)‖ ≤ ‖b‖/λ, so λ = ‖b‖/r is feasible.
    let mut lo = 0.0;
    let mut hi = moment.norm() / radius;
    while norm_sq_at(hi) > r_sq {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if norm_sq_at(mid) > r_sq {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= tolerance * 1e-6 * hi.max(1e-300) {
            break;
        }
    }
    let beta = beta_at(hi);
    let norm = beta.norm();
    if norm > radius + tolerance {
        return Err(MroError::Oracle(format!(
            "multiplier search ended outside the ball: {norm}"
        )));
    }
    Ok(LinearSolution { beta, multiplier: hi })
}

/// `G = (1/n) Σ ω_i x_i x_iᵀ`, `b = (1/n) Σ ω_i y_i x_i`, `c = (1/n) Σ ω_i y_i²`.
#[derive(Debug, Clone)]
struct LinearStats {
    gram: DMatrix<f64>,
    moment: DVector<f64>,
    label_sq: f64,
}

impl LinearStats {
    fn from_weights(dataset: &Dataset, weights: &[f64]) -> Self {
        let d = dataset.feature_dim();
        let mut gram = DMatrix::zeros(d, d);
        let mut moment = DVector::zeros(d);
        let mut label_sq = 0.0;
        for (s, &w) in dataset.samples().iter().zip(weights) {
            if w == 0.0 {
                continue;
            }
            let x = &s.features;
            for a in 0..d {
                let wx = w * x[a];
                moment[a] += wx * s.label;
                for b in a..d {
                    gram[(a, b)] += wx * x[b];
                }
            }
            label_sq += w * s.label * s.label;
        }
        for a in 0..d {
            for b in 0..a {
                gram[(a, b)] = gram[(b, a)];
            }
        }
        let inv_n = 1.0 / dataset.len() as f64;
        Self {
            gram: gram * inv_n,
            moment: moment * inv_n,
            label_sq: label_sq * inv_n,
        }
    }

    fn risk(&self, beta: &[f64]) -> f64 {
        let b = DVector::from_column_slice(beta);
        (b.transpose() * &self.gram * &b)[(0, 0)] - 2.0 * self.moment.dot(&b) + self.label_sq
    }
}

/// Weighted ERM bound to a dataset: the interface the game solver uses.
pub trait ErmOracle: Send + Sync {
    fn class(&self) -> &FunctionClass;

    fn num_weights(&self) -> usize;

    /// Minimizer of `Σ_w a_w R̂_w(f)`, i.e. ERM with `ω = Σ_w a_w W[:, w]`.
    fn best_response(&self, coefficients: &[f64]) -> Result<Hypothesis>;

    /// `R̂_w(h)` for every weight column `w`.
    fn risks(&self, hypothesis: &Hypothesis) -> Result<Vec<f64>>;
}

/// Oracle that mixes columns into per-sample weights and calls the request
/// functions directly. `O(n · |W|)` per query.
pub struct DirectOracle<'a> {
    dataset: &'a Dataset,
    loss: LossSpec,
    class: FunctionClass,
}

impl<'a> DirectOracle<'a> {
    pub fn new(dataset: &'a Dataset, loss: LossSpec, class: FunctionClass) -> Result<Self> {
        class.validate()?;
        class.check_compatible(dataset)?;
        Ok(Self { dataset, loss, class })
    }
}

impl ErmOracle for DirectOracle<'_> {
    fn class(&self) -> &FunctionClass {
        &self.class
    }

    fn num_weights(&self) -> usize {
        self.dataset.num_weights()
    }

    fn best_response(&self, coefficients: &[f64]) -> Result<Hypothesis> {
        let omega = self.dataset.mix_columns(coefficients)?;
        erm(&ErmRequest::new(&omega, self.dataset, &self.loss, &self.class))
    }

    fn risks(&self, hypothesis: &Hypothesis) -> Result<Vec<f64>> {
        hypothesis.check_compatible(self.dataset)?;
        Ok(self
            .dataset
            .columns()
            .iter()
            .map(|col| weighted_risk(hypothesis, col, self.dataset, &self.loss))
            .collect())
    }
}

enum Statistics {
    /// `risks[f][w] = R̂_w(f)`.
    Finite {
        risks: Vec<Vec<f64>>,
    },
    /// Per column: `(1/n)Σw`, `(1/n)Σwy`, `(1/n)Σwy²`.
    Interval {
        moments: Vec<[f64; 3]>,
    },
    Linear {
        columns: Vec<LinearStats>,
    },
}

/// Oracle backed by per-column sufficient statistics computed once.
///
/// Weighted ERM on `ω = Σ_w a_w W[:, w]` is linear in the column statistics,
/// so each query costs `O(|F|·|W|)` (finite), `O(|W|)` (interval), or
/// `O(|W| d² + d³)` (linear) regardless of `n`.
pub struct PrecomputedOracle {
    class: FunctionClass,
    num_weights: usize,
    stats: Statistics,
}

impl PrecomputedOracle {
    pub fn new(dataset: &Dataset, loss: LossSpec, class: FunctionClass) -> Result<Self> {
        class.validate()?;
        class.check_compatible(dataset)?;
        let stats = match &class {
            FunctionClass::Finite { .. } => {
                let members = class.members()?;
                let risks = members
                    .iter()
                    .map(|h| {
                        dataset
                            .columns()
                            .iter()
                            .map(|col| weighted_risk(h, col, dataset, &loss))
                            .collect::<Vec<_>>()
                    })
                    .collect::<Vec<_>>();
                if risks.iter().flatten().any(|r| !r.is_finite()) {
                    return Err(MroError::NonFinite("finite-class risk table".into()));
                }
                Statistics::Finite { risks }
            }
            FunctionClass::IntervalConstant { .. } => {
                if !loss.is_squared() {
                    return Err(MroError::Unsupported("interval class needs squared loss".into()));
                }
                let inv_n = 1.0 / dataset.len() as f64;
                let moments = dataset
                    .columns()
                    .iter()
                    .map(|col| {
                        let mut m = [0.0; 3];
                        for (w, s) in col.iter().zip(dataset.samples()) {
                            m[0] += w;
                            m[1] += w * s.label;
                            m[2] += w * s.label * s.label;
                        }
                        m.map(|v| v * inv_n)
                    })
                    .collect();
                Statistics::Interval { moments }
            }
            FunctionClass::LinearL2Ball { .. } => {
                if !loss.is_squared() {
                    return Err(MroError::Unsupported("linear class needs squared loss".into()));
                }
                let columns = dataset
                    .columns()
                    .iter()
                    .map(|col| LinearStats::from_weights(dataset, col))
                    .collect();
                Statistics::Linear { columns }
            }
        };
        Ok(Self {
            class,
            num_weights: dataset.num_weights(),
            stats,
        })
    }

    /// The `|F| × |W|` risk table of a finite class.
    pub fn risk_table(&self) -> Option<&[Vec<f64>]> {
        match &self.stats {
            Statistics::Finite { risks } => Some(risks),
            _ => None,
        }
    }

    fn check_coefficients(&self, coefficients: &[f64]) -> Result<()> {
        if coefficients.len() != self.num_weights {
            return Err(MroError::DimensionMismatch {
                expected: self.num_weights,
                got: coefficients.len(),
            });
        }
        if coefficients.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
            return Err(MroError::Oracle(format!(
                "invalid mixing coefficients {coefficients:?}"
            )));
        }
        if coefficients.iter().all(|&a| a == 0.0) {
            return Err(MroError::Oracle("all mixing coefficients are zero".into()));
        }
        Ok(())
    }
}

impl ErmOracle for PrecomputedOracle {
    fn class(&self) -> &FunctionClass {
        &self.class
    }

    fn num_weights(&self) -> usize {
        self.num_weights
    }

    fn best_response(&self, coefficients: &[f64]) -> Result<Hypothesis> {
        self.check_coefficients(coefficients)?;
        match (&self.stats, &self.class) {
            (Statistics::Finite { risks }, _) => {
                let mut best: Option<(usize, f64)> = None;
                for (i, row) in risks.iter().enumerate() {
                    let v: f64 = row.iter().zip(coefficients).map(|(r, a)| r * a).sum();
                    if best.is_none_or(|(_, b)| v < b) {
                        best = Some((i, v));
                    }
                }
                self.class.member(best.expect("nonempty class").0)
            }
            (Statistics::Interval { moments }, FunctionClass::IntervalConstant { radius }) => {
                let (mut sw, mut swy) = (0.0, 0.0);
                for (m, a) in moments.iter().zip(coefficients) {
                    sw += a * m[0];
                    swy += a * m[1];
                }
                clipped_mean(swy, sw, *radius).and_then(|c| self.class.constant(c))
            }
            (Statistics::Linear { columns }, FunctionClass::LinearL2Ball { radius, .. }) => {
                let d = columns[0].moment.len();
                let mut gram = DMatrix::zeros(d, d);
                let mut moment = DVector::zeros(d);
                for (s, &a) in columns.iter().zip(coefficients) {
                    if a == 0.0 {
                        continue;
                    }
                    gram += &s.gram * a;
                    moment += &s.moment * a;
                }
                let sol = constrained_least_squares(&gram, &moment, *radius, ORACLE_TOLERANCE)?;
                self.class.linear(sol.beta.iter().copied().collect())
            }
            _ => unreachable!("statistics match the class"),
        }
    }

    fn risks(&self, hypothesis: &Hypothesis) -> Result<Vec<f64>> {
        match &self.stats {
            Statistics::Finite { risks } => {
                let i = hypothesis
                    .index()
                    .ok_or_else(|| MroError::InvalidArgument("hypothesis is not a class member".into()))?;
                risks.get(i).cloned().ok_or(MroError::IndexOutOfRange {
                    index: i,
                    len: risks.len(),
                })
            }
            Statistics::Interval { moments } => {
                let c = hypothesis
                    .constant_value()
                    .ok_or_else(|| MroError::InvalidArgument("expected a constant hypothesis".into()))?;
                Ok(moments.iter().map(|m| m[0] * c * c - 2.0 * m[1] * c + m[2]).collect())
            }
            Statistics::Linear { columns } => {
                let beta = hypothesis
                    .coefficients()
                    .ok_or_else(|| MroError::InvalidArgument("expected a linear hypothesis".into()))?;
                if beta.len() != columns[0].moment.len() {
                    return Err(MroError::DimensionMismatch {
                        expected: columns[0].moment.len(),
                        got: beta.len(),
                    });
                }
                Ok(columns.iter().map(|s| s.risk(beta)).collect())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Sample;

    fn labels(ys: &[f64]) -> Dataset {
        let samples = ys.iter().map(|&y| Sample::new(vec![], y)).collect();
        Dataset::new(samples, vec![vec![1.0; ys.len()]], vec!["w0".into()]).unwrap()
    }

    fn prop1_pooled() -> Dataset {
        let samples = vec![
            Sample::tagged(vec![], 0.1, 0),
            Sample::tagged(vec![], 0.1, 0),
            Sample::tagged(vec![], 0.0, 1),
            Sample::tagged(vec![], 1.0, 1),
        ];
        Dataset::new(
            samples,
            vec![vec![2.0, 2.0, 0.0, 0.0], vec![0.0, 0.0, 2.0, 2.0]],
            vec!["p1".into(), "p2".into()],
        )
        .unwrap()
    }

    #[test]
    fn finite_selects_p1_minimizer() {
        let ds = prop1_pooled();
        let class = FunctionClass::finite_constants(&[0.3, 0.6]).unwrap();
        let loss = LossSpec::squared(1.0);
        let omega = ds.column(0).to_vec();
        let h = erm_finite(&ErmRequest::new(&omega, &ds, &loss, &class)).unwrap();
        assert_eq!(h.index(), Some(0));
        // pooled risks: 0.165 vs 0.255
        let pooled = vec![1.0; 4];
        let h = erm_finite(&ErmRequest::new(&pooled, &ds, &loss, &class)).unwrap();
        assert_eq!(h.index(), Some(0));
        let r0 = weighted_risk(&class.member(0).unwrap(), &pooled, &ds, &loss);
        let r1 = weighted_risk(&class.member(1).unwrap(), &pooled, &ds, &loss);
        assert!((r0 - 0.165).abs() < 1e-12 && (r1 - 0.255).abs() < 1e-12);
    }

    #[test]
    fn finite_ties_go_to_lowest_index() {
        let ds = labels(&[0.0, 1.0]);
        let class = FunctionClass::finite_constants(&[0.5, 0.5, 0.5]).unwrap();
        let loss = LossSpec::squared(1.0);
        let h = erm_finite(&ErmRequest::new(&[1.0, 1.0], &ds, &loss, &class)).unwrap();
        assert_eq!(h.index(), Some(0));
    }

    #[test]
    fn interval_mean_cases() {
        let ds = labels(&[0.0, 1.0]);
        let loss = LossSpec::squared(1.0);
        let wide = FunctionClass::interval(1.0).unwrap();
        let narrow = FunctionClass::interval(0.3).unwrap();
        let fit = |class: &FunctionClass, w: &[f64]| {
            erm_interval_mean(&ErmRequest::new(w, &ds, &loss, class))
                .unwrap()
                .constant_value()
                .unwrap()
        };
        assert_eq!(fit(&wide, &[1.0, 1.0]), 0.5);
        assert_eq!(fit(&narrow, &[1.0, 1.0]), 0.3);
        assert_eq!(fit(&wide, &[1.0, 3.0]), 0.75);
        assert!(erm_interval_mean(&ErmRequest::new(&[0.0, 0.0], &ds, &loss, &wide)).is_err());
    }

    fn linear_ds(xs: &[Vec<f64>], ys: &[f64]) -> Dataset {
        let samples = xs.iter().zip(ys).map(|(x, &y)| Sample::new(x.clone(), y)).collect();
        Dataset::new(samples, vec![vec![1.0; ys.len()]], vec!["w0".into()]).unwrap()
    }

    #[test]
    fn linear_projects_to_boundary() {
        let ds = linear_ds(&[vec![1.0], vec![1.0]], &[2.0, 2.0]);
        let class = FunctionClass::linear_ball(1, 1.0).unwrap();
        let loss = LossSpec::squared(9.0);
        let h = erm_linear_l2(&ErmRequest::new(&[1.0, 1.0], &ds, &loss, &class)).unwrap();
        assert!((h.coefficients().unwrap()[0] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn linear_zero_labels_give_zero() {
        let ds = linear_ds(&[vec![1.0, 0.5], vec![-0.2, 0.3], vec![0.0, 1.0]], &[0.0, 0.0, 0.0]);
        let class = FunctionClass::linear_ball(2, 1.0).unwrap();
        let loss = LossSpec::squared(4.0);
        let h = erm_linear_l2(&ErmRequest::new(&[1.0, 2.0, 1.0], &ds, &loss, &class)).unwrap();
        assert!(h.coefficients().unwrap().iter().all(|b| b.abs() < 1e-14));
    }

    #[test]
    fn linear_interior_satisfies_normal_equations() {
        let xs = vec![vec![0.5, 0.1], vec![-0.3, 0.4], vec![0.2, -0.6], vec![0.7, 0.7]];
        let ys = [0.2, 0.1, -0.3, 0.5];
        let w = [1.0, 0.5, 2.0, 1.5];
        let ds = linear_ds(&xs, &ys);
        let class = FunctionClass::linear_ball(2, 10.0).unwrap();
        let loss = LossSpec::squared(4.0);
        let h = erm_linear_l2(&ErmRequest::new(&w, &ds, &loss, &class)).unwrap();
        let beta = h.coefficients().unwrap();
        let mut grad = [0.0; 2];
        for ((x, y), wi) in xs.iter().zip(ys).zip(w) {
            let r = beta[0] * x[0] + beta[1] * x[1] - y;
            grad[0] += wi * r * x[0];
            grad[1] += wi * r * x[1];
        }
        assert!(grad.iter().all(|g| g.abs() < 1e-10), "{grad:?}");
    }

    #[test]
    fn rank_deficient_gets_minimal_norm() {
        // both features identical: any β with β0 + β1 = 0.5 interpolates
        let ds = linear_ds(&[vec![1.0, 1.0], vec![2.0, 2.0]], &[0.5, 1.0]);
        let class = FunctionClass::linear_ball(2, 10.0).unwrap();
        let loss = LossSpec::squared(4.0);
        let h = erm_linear_l2(&ErmRequest::new(&[1.0, 1.0], &ds, &loss, &class)).unwrap();
        let beta = h.coefficients().unwrap();
        assert!(
            (beta[0] - 0.25).abs() < 1e-10 && (beta[1] - 0.25).abs() < 1e-10,
            "{beta:?}"
        );
    }

    #[test]
    fn request_validation() {
        let ds = labels(&[0.0, 1.0]);
        let loss = LossSpec::squared(1.0);
        let class = FunctionClass::finite_constants(&[0.0]).unwrap();
        assert!(erm(&ErmRequest::new(&[1.0], &ds, &loss, &class)).is_err());
        assert!(erm(&ErmRequest::new(&[-1.0, 2.0], &ds, &loss, &class)).is_err());
        assert!(erm(&ErmRequest::new(&[f64::NAN, 2.0], &ds, &loss, &class)).is_err());
        let abs = LossSpec::new(crate::loss::LossKind::Absolute, 1.0, 1.0).unwrap();
        let interval = FunctionClass::interval(1.0).unwrap();
        assert!(erm(&ErmRequest::new(&[1.0, 1.0], &ds, &abs, &interval)).is_err());
    }

    #[test]
    fn precomputed_matches_direct() {
        let ds = prop1_pooled();
        let loss = LossSpec::squared(1.0);
        for class in [
            FunctionClass::finite_constants(&[0.3, 0.6, 0.45]).unwrap(),
            FunctionClass::interval(1.0).unwrap(),
        ] {
            let fast = PrecomputedOracle::new(&ds, loss, class.clone()).unwrap();
            let slow = DirectOracle::new(&ds, loss, class).unwrap();
            for a in [[0.5, 0.5], [0.9, 0.1], [0.0, 1.0]] {
                let hf = fast.best_response(&a).unwrap();
                let hs = slow.best_response(&a).unwrap();
                assert!((hf.parameters()[0] - hs.parameters()[0]).abs() < 1e-12);
                for (x, y) in fast.risks(&hf).unwrap().iter().zip(slow.risks(&hs).unwrap()) {
                    assert!((x - y).abs() < 1e-12);
                }
            }
        }
    }
}
