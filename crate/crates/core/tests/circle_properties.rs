mod common;

use common::irrational;
use proptest::prelude::*;
use wds_core::angle::Angle;
use wds_core::circle::{DenjoyMap, DEFAULT_CUTOFF};
use wds_core::symbolic::sturmian_window;

fn circle_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(1.0);
    d.min(1.0 - d)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn semi_conjugacy_intertwines_with_rotation(alpha in irrational(), ts in prop::collection::vec(0.0f64..1.0, 1000)) {
        let h = DenjoyMap::build(alpha.clone(), DEFAULT_CUTOFF).unwrap();
        for t in ts {
            let x = h.position(t);
            let lhs = h.semi_conjugacy(h.eval(x));
            let rhs = (h.semi_conjugacy(x) + alpha.value()).rem_euclid(1.0);
            prop_assert!(circle_gap(lhs, rhs) <= 1e-9, "t = {}", t);
        }
    }

    #[test]
    fn rotation_estimate_within_two_over_n(alpha in irrational(), n in 10usize..5000, x in 0.0f64..1.0) {
        let h = DenjoyMap::build(alpha.clone(), DEFAULT_CUTOFF).unwrap();
        prop_assert!((h.rotation_estimate(x, n) - alpha.value()).abs() <= 2.0 / n as f64);
    }

    #[test]
    fn itinerary_of_b_is_the_sturmian_window(alpha in irrational()) {
        let h = DenjoyMap::build(alpha.clone(), DEFAULT_CUTOFF).unwrap();
        let it = h.itinerary(h.b_point(), 1000).unwrap();
        prop_assert_eq!(it, sturmian_window(&alpha, &Angle::zero(), 1000).unwrap());
    }

    /// Points of the minimal set further apart than 0.01 are told apart
    /// within 200 iterates either way.
    #[test]
    fn separated_points_have_distinct_itineraries(alpha in irrational(), s in 0.0f64..1.0, t in 0.0f64..1.0) {
        let h = DenjoyMap::build(alpha, DEFAULT_CUTOFF).unwrap();
        let (x, y) = (h.position(s), h.position(t));
        prop_assume!(circle_gap(x, y) > 0.01);
        prop_assert_ne!(h.itinerary(x, 200).unwrap(), h.itinerary(y, 200).unwrap());
    }
}
