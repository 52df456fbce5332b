use mrokit::class::FunctionClass;
use mrokit::data::{validate_dataset, Dataset, Sample, WeightFamily};
use mrokit::oracles::{constrained_least_squares, erm, DirectOracle, ErmOracle, ErmRequest, PrecomputedOracle};
use mrokit::risk::{empirical_risk, weighted_risk};
use mrokit::LossSpec;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn scalar_dataset(labels: &[f64], weights: &[f64]) -> Dataset {
    let samples = labels.iter().map(|&y| Sample::new(vec![], y)).collect();
    Dataset::new(samples, vec![weights.to_vec()], vec!["w".into()]).unwrap()
}

fn weighted_points() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (1usize..20).prop_flat_map(|n| {
        (
            prop::collection::vec(-3.0f64..3.0, n),
            prop::collection::vec(0.0f64..4.0, n).prop_filter("some positive weight", |w| w.iter().any(|&v| v > 1e-3)),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn interval_erm_beats_every_grid_constant((labels, weights) in weighted_points(), radius in 0.1f64..4.0) {
        let ds = scalar_dataset(&labels, &weights);
        let loss = LossSpec::squared(64.0);
        let class = FunctionClass::interval(radius).unwrap();
        let h = erm(&ErmRequest::new(&weights, &ds, &loss, &class)).unwrap();
        let best = empirical_risk(&h, 0, &ds, &loss).unwrap();
        for k in 0..=64 {
            let c = -radius + 2.0 * radius * k as f64 / 64.0;
            let other = class.constant(c).unwrap();
            prop_assert!(best <= empirical_risk(&other, 0, &ds, &loss).unwrap() + 1e-12);
        }
    }

    #[test]
    fn finite_erm_is_the_enumerated_minimizer(
        (labels, weights) in weighted_points(),
        values in prop::collection::vec(-2.0f64..2.0, 1..8),
    ) {
        let ds = scalar_dataset(&labels, &weights);
        let loss = LossSpec::squared(64.0);
        let class = FunctionClass::finite_constants(&values).unwrap();
        let h = erm(&ErmRequest::new(&weights, &ds, &loss, &class)).unwrap();
        let risks: Vec<f64> = class.members().unwrap().iter().map(|f| weighted_risk(f, &weights, &ds, &loss)).collect();
        let chosen = h.index().unwrap();
        let min = risks.iter().copied().fold(f64::INFINITY, f64::min);
        prop_assert_eq!(risks[chosen], min);
        // ties resolve to the lowest index
        prop_assert_eq!(risks.iter().position(|&r| r == min).unwrap(), chosen);
    }
}

fn linear_problem() -> impl Strategy<Value = (usize, Vec<f64>, Vec<f64>, Vec<f64>, f64)> {
    (1usize..5, 1usize..25).prop_flat_map(|(d, n)| {
        (
            Just(d),
            prop::collection::vec(-1.0f64..1.0, n * d),
            prop::collection::vec(-2.0f64..2.0, n),
            prop::collection::vec(0.0f64..3.0, n).prop_filter("some positive weight", |w| w.iter().any(|&v| v > 1e-3)),
            0.05f64..3.0,
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn linear_erm_satisfies_kkt((d, xs, ys, ws, radius) in linear_problem()) {
        let n = ys.len();
        let mut gram = DMatrix::zeros(d, d);
        let mut moment = DVector::zeros(d);
        for i in 0..n {
            let x = DVector::from_column_slice(&xs[i * d..(i + 1) * d]);
            gram += &x * x.transpose() * (ws[i] / n as f64);
            moment += &x * (ws[i] * ys[i] / n as f64);
        }
        let sol = constrained_least_squares(&gram, &moment, radius, 1e-8).unwrap();
        let norm = sol.beta.norm();
        prop_assert!(norm <= radius + 1e-8);
        prop_assert!(sol.multiplier >= 0.0);
        // stationarity
        let residual = (&gram * &sol.beta + &sol.beta * sol.multiplier - &moment).norm();
        let scale = 1.0 + gram.norm() + moment.norm() + sol.multiplier;
        prop_assert!(residual <= 1e-6 * scale, "residual {residual}");
        // complementary slackness
        if sol.multiplier > 1e-9 {
            prop_assert!((norm - radius).abs() <= 1e-6 * radius.max(1.0));
        }
        // objective no worse than feasible perturbations
        let objective = |b: &DVector<f64>| (b.transpose() * &gram * b)[(0, 0)] - 2.0 * moment.dot(b);
        let best = objective(&sol.beta);
        for k in 0..d {
            for sign in [-1.0, 1.0] {
                let mut b = sol.beta.clone();
                b[k] += sign * 0.05 * radius;
                let nb = b.norm();
                if nb > radius {
                    b *= radius / nb;
                }
                prop_assert!(best <= objective(&b) + 1e-9);
            }
        }
    }

    #[test]
    fn precomputed_and_direct_oracles_agree(
        (d, xs, ys, ws, radius) in linear_problem(),
        second in prop::collection::vec(0.0f64..3.0, 1..25),
        a in 0.0f64..1.0,
    ) {
        let n = ys.len();
        let samples: Vec<Sample> = (0..n).map(|i| Sample::new(xs[i * d..(i + 1) * d].to_vec(), ys[i])).collect();
        let col2: Vec<f64> = (0..n).map(|i| second[i % second.len()]).collect();
        let ds = Dataset::new(samples, vec![ws.clone(), col2], vec!["a".into(), "b".into()]).unwrap();
        let class = FunctionClass::linear_ball(d, radius).unwrap();
        let loss = LossSpec::squared(100.0);
        let fast = PrecomputedOracle::new(&ds, loss, class.clone()).unwrap();
        let slow = DirectOracle::new(&ds, loss, class).unwrap();
        let coefficients = [a + 0.01, 1.0 - a];
        let hf = fast.best_response(&coefficients).unwrap();
        let hs = slow.best_response(&coefficients).unwrap();
        let rf = fast.risks(&hf).unwrap();
        let rs = slow.risks(&hs).unwrap();
        for (x, y) in rf.iter().zip(&rs) {
            prop_assert!((x - y).abs() <= 1e-7 * (1.0 + x.abs()), "{x} vs {y}");
        }
    }

    #[test]
    fn renormalized_columns_have_unit_mean(
        columns in prop::collection::vec(prop::collection::vec(0.0f64..5.0, 30), 1..4),
    ) {
        prop_assume!(columns.iter().all(|c| c.iter().any(|&v| v > 1e-6)));
        let samples = (0..30).map(|_| Sample::new(vec![], 0.0)).collect();
        let names: Vec<String> = (0..columns.len()).map(|i| format!("w{i}")).collect();
        let ds = Dataset::new(samples, columns.clone(), names.clone()).unwrap();
        let family = WeightFamily::from_bounds(names, vec![5.0; columns.len()]).unwrap();
        let v = validate_dataset(&ds, &family, true).unwrap();
        for w in 0..columns.len() {
            prop_assert!((v.dataset.column_mean(w) - 1.0).abs() <= 1e-12);
            let b = v.family.bound(w);
            prop_assert!(v.dataset.column(w).iter().all(|&x| x <= b * (1.0 + 1e-12)));
        }
    }
}

#[test]
fn spec_linear_examples() {
    // d = 1: unconstrained optimum β = 2 is clipped to the boundary β = 1
    let ds = Dataset::new(vec![Sample::new(vec![1.0], 2.0)], vec![vec![1.0]], vec!["w".into()]).unwrap();
    let class = FunctionClass::linear_ball(1, 1.0).unwrap();
    let loss = LossSpec::squared(9.0);
    let h = erm(&ErmRequest::new(&[1.0], &ds, &loss, &class)).unwrap();
    assert!((h.coefficients().unwrap()[0] - 1.0).abs() < 1e-8);

    // duplicated identical features: minimal-norm split
    let ds = Dataset::new(
        vec![Sample::new(vec![1.0, 1.0], 0.5)],
        vec![vec![1.0]],
        vec!["w".into()],
    )
    .unwrap();
    let class = FunctionClass::linear_ball(2, 10.0).unwrap();
    let h = erm(&ErmRequest::new(&[1.0], &ds, &loss, &class)).unwrap();
    let b = h.coefficients().unwrap();
    assert!((b[0] - 0.25).abs() < 1e-10 && (b[1] - 0.25).abs() < 1e-10);
}
