use interinfo_core::dynamics::*;
use proptest::prelude::*;

/// Plain iteration of the solved incursive map, independent of `simulate`.
fn iterate_incursive(a: f64, mut x: f64, steps: usize) -> f64 {
    for _ in 0..steps {
        x = a * x / (1.0 + a * x);
    }
    x
}

#[test]
fn incursive_fixed_point_is_exact() {
    for a in [1.5, 2.0, 3.0, 4.0, 5.0, 10.0] {
        let x = steady_state_incursive(a);
        assert!((incursive_step(a, x) - x).abs() <= 1e-12);
    }
}

#[test]
fn incursive_oracle_agrees_with_simulation() {
    let p = DynamicsParams::new(5.0, 0.3, 200).unwrap();
    let t = simulate(p, Variant::Incursive, None).unwrap();
    assert_eq!(t.final_value(), iterate_incursive(5.0, 0.3, 200));
    assert!((iterate_incursive(5.0, 0.3, 200) - 0.8).abs() < 1e-9);
}

proptest! {
    #[test]
    fn incursive_converges_from_anywhere(a in 1.1f64..=10.0, x0 in 1e-6f64..=1.0) {
        let p = DynamicsParams::new(a, x0, 10_000).unwrap();
        let t = simulate(p, Variant::Incursive, None).unwrap();
        prop_assert!(t.first_within(steady_state_incursive(a)).is_some());
    }

    #[test]
    fn hyper_incursive_inverts_the_logistic_map(a in 4.0f64..50.0, frac in 0.0f64..=1.0, decision: bool) {
        let x = frac * a / 4.0;
        let x = x.min(1.0);
        let y = hyper_incursive_step(a, x, decision).unwrap();
        prop_assert!((recursive_step(a, y) - x).abs() <= 1e-9);
        prop_assert!((0.0..=1.0).contains(&y));
    }

    #[test]
    fn hyper_incursive_root_order(a in 0.5f64..20.0, x in 0.0f64..=1.0) {
        match (hyper_incursive_step(a, x, true), hyper_incursive_step(a, x, false)) {
            (Ok(hi), Ok(lo)) => {
                prop_assert!(hi >= lo);
                let disc = 1.0 - 4.0 / a * x;
                prop_assert_eq!(hi == lo, disc == 0.0);
            }
            (Err(_), Err(_)) => prop_assert!(4.0 / a * x > 1.0),
            _ => prop_assert!(false, "roots disagree on existence"),
        }
    }

    #[test]
    fn recursive_stays_in_unit_interval(a in 0.0f64..=4.0, x0 in 0.0f64..=1.0) {
        let p = DynamicsParams::new(a, x0, 500).unwrap();
        let t = simulate(p, Variant::Recursive, None).unwrap();
        prop_assert!(t.truncation.is_none());
        prop_assert!(t.values.iter().all(|x| (0.0..=1.0).contains(x)));
        prop_assert_eq!(t.values.len(), 501);
    }
}

#[test]
fn hyper_incursive_trajectories_satisfy_the_implicit_map() {
    let p = DynamicsParams::new(4.7, 0.4, 300).unwrap();
    let t = simulate(p, Variant::HyperIncursive, Some(Decisions::Seeded(2010))).unwrap();
    assert!(!t.is_truncated());
    assert_eq!(t.decisions.as_ref().unwrap().len(), 300);
    for w in t.values.windows(2) {
        assert!((4.7 * w[1] * (1.0 - w[1]) - w[0]).abs() <= 1e-9);
    }
}

#[test]
fn below_four_the_hyper_incursive_map_breaks_down() {
    let p = DynamicsParams::new(3.0, 0.9, 10).unwrap();
    let t = simulate(
        p,
        Variant::HyperIncursive,
        Some(Decisions::Explicit(vec![true; 10])),
    )
    .unwrap();
    assert!(
        matches!(t.truncation, Some(Truncation::ComplexRoot { step: 1, discriminant }) if discriminant < 0.0)
    );
}
