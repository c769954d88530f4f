use heart_core::linalg::{dot, norm};
use heart_core::sphere::{exp_map, geodesic_distance, log_map, normalize, slerp, tangent_project, Direction};
use proptest::prelude::*;

fn unit_vec(d: usize) -> impl Strategy<Value = Direction> {
    prop::collection::vec(-1.0f64..1.0, d)
        .prop_filter("non-degenerate", |v| norm(v) > 1e-2)
        .prop_map(|v| Direction::normalized(&v).unwrap())
}

fn pair(d: usize) -> impl Strategy<Value = (Direction, Direction)> {
    (unit_vec(d), unit_vec(d)).prop_filter("not antipodal", |(u, v)| geodesic_distance(u, v) < 3.1)
}

fn dims() -> impl Strategy<Value = usize> {
    prop_oneof![Just(3usize), Just(16), Just(768)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn slerp_stays_on_the_sphere((u, v) in dims().prop_flat_map(pair), lambda in 0.0f64..=1.0) {
        let s = slerp(&u, &v, lambda).unwrap();
        prop_assert!((norm(s.as_slice()) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn slerp_is_symmetric((u, v) in dims().prop_flat_map(pair), lambda in 0.0f64..=1.0) {
        let a = slerp(&u, &v, lambda).unwrap();
        let b = slerp(&v, &u, 1.0 - lambda).unwrap();
        prop_assert!(geodesic_distance(&a, &b) < 1e-6);
    }

    #[test]
    fn slerp_moves_linearly_in_angle((u, v) in dims().prop_flat_map(pair), lambda in 0.0f64..=1.0) {
        let theta = geodesic_distance(&u, &v);
        let s = slerp(&u, &v, lambda).unwrap();
        prop_assert!((geodesic_distance(&u, &s) - lambda * theta).abs() < 1e-6);
    }

    #[test]
    fn exp_inverts_log((u, v) in dims().prop_flat_map(pair)) {
        let xi = log_map(&u, &v).unwrap();
        prop_assert!(dot(xi.coords(), u.as_slice()).abs() < 1e-6);
        prop_assert!((xi.norm() - geodesic_distance(&u, &v)).abs() < 1e-9);
        let back = exp_map(&u, &xi).unwrap();
        prop_assert!(geodesic_distance(&back, &v) < 1e-6);
    }

    #[test]
    fn tangent_projection_is_idempotent(u in unit_vec(16), delta in prop::collection::vec(-5.0f64..5.0, 16)) {
        let once = tangent_project(&u, &delta);
        let twice = tangent_project(&u, &once);
        prop_assert!(dot(&once, u.as_slice()).abs() < 1e-6 * norm(&delta).max(1.0));
        for (a, b) in once.iter().zip(&twice) {
            prop_assert!((a - b).abs() < 1e-12 * norm(&delta).max(1.0));
        }
    }

    #[test]
    fn normalize_reconstructs(v in prop::collection::vec(-100.0f64..100.0, 2..64)) {
        prop_assume!(norm(&v) > 1e-6);
        let (d, n) = normalize(&v).unwrap();
        for (x, y) in d.as_slice().iter().zip(&v) {
            prop_assert!((x * n - y).abs() <= 1e-6 * n);
        }
    }
}
