use pswl::reliability::*;
use proptest::prelude::*;

fn params() -> impl Strategy<Value = FailureModelParams> {
    (5.0f64..10.0, 0.02f64..0.5).prop_map(|(mu, sigma)| FailureModelParams { mu, sigma })
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

#[test]
fn oracle_values() {
    let fp = FailureModelParams::default();
    let p = failure_probability(3000.0 * 0.1f64.exp(), &fp).unwrap();
    assert!(rel(p, 1.0 / (1.0 + (-1.0f64).exp())) < 1e-9);
    assert!(rel(p, 0.731_058_578_630_005) < 1e-9);

    let lp = LifetimeParams { k: 1.0, k_p: 1000.0 };
    assert!(rel(effective_lifetime(3000.0, &lp, &fp), 3500.0) < 1e-9);

    let t = initial_wear_for_probability(1e-4, &fp).unwrap();
    let hand = 3000.0 * (0.1 * (1e-4f64 / 0.9999).ln()).exp();
    assert!(rel(t, hand) < 1e-9);
    assert!((t - 1194.3).abs() < 0.05);

    assert_eq!(array_failure_probability(&[0.5, 0.5]), 0.75);
    assert_eq!(array_failure_probability(&[1.0, 0.0]), 1.0);
    assert_eq!(array_failure_probability(&[0.0, 0.0, 0.0]), 0.0);
}

#[test]
fn inverse_at_fixed_points() {
    let fp = FailureModelParams::default();
    for p in [0.01, 0.1, 0.5, 0.9] {
        let t = initial_wear_for_probability(p, &fp).unwrap();
        assert!(rel(failure_probability(t, &fp).unwrap(), p) < 1e-9, "p={p}");
    }
    assert!(rel(initial_wear_for_probability(0.5, &fp).unwrap(), 3000.0) < 1e-12);
}

// The density peaks at e^mu * ((1 - sigma) / (1 + sigma))^sigma, a little
// below the median, so growth is checked from the 5th percentile to there.
#[test]
fn acceleration_up_to_the_density_mode() {
    let fp = FailureModelParams::default();
    let lo = initial_wear_for_probability(0.05, &fp).unwrap();
    let hi = fp.mu.exp() * ((1.0 - fp.sigma) / (1.0 + fp.sigma)).powf(fp.sigma);
    let step = (hi - lo) / 20.0;
    let mut prev = 0.0;
    for i in 0..20 {
        let t = lo + step * i as f64;
        let d = failure_probability(t + step, &fp).unwrap() - failure_probability(t, &fp).unwrap();
        assert!(d > prev, "forward difference shrank at t={t:.1}");
        prev = d;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn probability_monotone_and_bounded(fp in params(), t1 in 1.0f64..20_000.0, dt in 1e-3f64..5_000.0) {
        let p1 = failure_probability(t1, &fp).unwrap();
        let p2 = failure_probability(t1 + dt, &fp).unwrap();
        prop_assert!((0.0..=1.0).contains(&p1));
        // strict unless both ends round to the same double in a tail
        prop_assert!(p2 > p1 || p1 == p2 && (p1 < 1e-300 || 1.0 - p1 < 1e-12));
    }

    #[test]
    fn lifetime_monotone_and_above_linear(
        fp in params(),
        k in 0.1f64..10.0,
        k_p in 0.0f64..1e7,
        t1 in 0.0f64..20_000.0,
        dt in 1e-3f64..5_000.0,
    ) {
        let lp = LifetimeParams { k, k_p };
        let l1 = effective_lifetime(t1, &lp, &fp);
        let l2 = effective_lifetime(t1 + dt, &lp, &fp);
        prop_assert!(l2 > l1);
        prop_assert!(l1 >= k * t1);
    }

    #[test]
    fn inverse_round_trip(fp in params(), p in 1e-6f64..0.999_999) {
        let t = initial_wear_for_probability(p, &fp).unwrap();
        prop_assert!(rel(failure_probability(t, &fp).unwrap(), p) < 1e-9);
    }

    #[test]
    fn array_probability_bounded_and_dominates(probs in prop::collection::vec(0.0f64..=1.0, 0..16)) {
        let a = array_failure_probability(&probs);
        prop_assert!((0.0..=1.0).contains(&a));
        for &p in &probs {
            prop_assert!(a >= p - 1e-12);
        }
    }

    #[test]
    fn zero_penalty_preserves_wear_order(fp in params(), pe in prop::collection::vec(0.0f64..10_000.0, 2..8)) {
        let lp = LifetimeParams { k: 1.0, k_p: 0.0 };
        let l: Vec<f64> = pe.iter().map(|&t| effective_lifetime(t, &lp, &fp)).collect();
        for i in 0..pe.len() {
            for j in 0..pe.len() {
                prop_assert_eq!(pe[i] < pe[j], l[i] < l[j]);
            }
        }
    }
}
