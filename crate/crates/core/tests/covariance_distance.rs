use proptest::prelude::*;
use quadwind_core::metrics::{covariance_distance, Cov2};

fn pd() -> impl Strategy<Value = Cov2> {
    (0.05f64..5.0, 0.05f64..5.0, -0.95f64..0.95).prop_map(|(sa, sb, rho)| [sa * sa, rho * sa * sb, sb * sb])
}

#[test]
fn identical_matrices_are_zero_apart() {
    let a = [2.0, 0.3, 1.1];
    assert!(covariance_distance(&a, &a).unwrap().abs() < 1e-12);
}

#[test]
fn scaled_identity_distance() {
    let e2 = std::f64::consts::E.powi(2);
    let d = covariance_distance(&[1.0, 0.0, 1.0], &[e2, 0.0, e2]).unwrap();
    assert!((d - 2.0 * 2f64.sqrt()).abs() < 1e-10, "{d}");
}

#[test]
fn rejects_indefinite_input() {
    assert!(covariance_distance(&[1.0, 2.0, 1.0], &[1.0, 0.0, 1.0]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn symmetric(a in pd(), b in pd()) {
        let ab = covariance_distance(&a, &b).unwrap();
        let ba = covariance_distance(&b, &a).unwrap();
        prop_assert!((ab - ba).abs() <= 1e-9 * ab.max(1.0));
    }

    #[test]
    fn invariant_to_common_scale(a in pd(), b in pd(), k in 0.01f64..100.0) {
        let d = covariance_distance(&a, &b).unwrap();
        let scaled = |m: Cov2| m.map(|v| v * k);
        let dk = covariance_distance(&scaled(a), &scaled(b)).unwrap();
        prop_assert!((d - dk).abs() <= 1e-9 * d.max(1.0));
    }

    #[test]
    fn self_distance_vanishes(a in pd()) {
        prop_assert!(covariance_distance(&a, &a).unwrap() < 1e-7);
    }
}
