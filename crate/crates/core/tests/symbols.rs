use kacspec::spectrum::{c0, d0};
use kacspec::symbols::*;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn radial_in_phase_space(q in 0.0f64..60.0, a in 0.0f64..1.0, b in 0.0f64..1.0) {
        // Two points on the same level set q = ξ² + v²/4.
        let p1 = PhasePoint::one_d(2.0 * (a * q).sqrt(), ((1.0 - a) * q).sqrt());
        let p2 = PhasePoint::one_d(-2.0 * (b * q).sqrt(), -((1.0 - b) * q).sqrt());
        let (x, y) = (l1_symbol(&p1, 0.5).unwrap(), l1_symbol(&p2, 0.5).unwrap());
        prop_assert!((x - y).abs() <= 1e-10 * (1.0 + x.abs()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn second_part_even_and_bounded(v in -8.0f64..8.0, xi in -4.0f64..4.0, s in 0.1f64..0.9) {
        let a = l2_symbol(&PhasePoint::one_d(v, xi), s).unwrap();
        prop_assert_eq!(a, l2_symbol(&PhasePoint::one_d(-v, xi), s).unwrap());
        prop_assert_eq!(a, l2_symbol(&PhasePoint::one_d(v, -xi), s).unwrap());
        let origin = l2_symbol(&PhasePoint::origin(1), s).unwrap().abs();
        let q = xi * xi + v * v / 4.0;
        prop_assert!(a.abs() * (q / 3.0).exp() <= 2.0 * origin);
    }

    #[test]
    fn mehler_between_zero_and_one(t in 0.0f64..10.0, v in -5.0f64..5.0, xi in -5.0f64..5.0) {
        let m = mehler_symbol(t, &PhasePoint::one_d(v, xi), 1).unwrap();
        prop_assert!(m > 0.0 && m <= 1.0);
    }
}

#[test]
fn expansion_constants_shared_by_all_dimensions() {
    for d in 1..=3 {
        let e = expansion_coefficients_d(0.5, d, 2).unwrap();
        assert_eq!(e.c0(), c0(0.5).unwrap());
        assert_eq!(e.d0(), d0(0.5).unwrap());
    }
}

#[test]
fn grid_export_is_consistent() {
    let rows = symbol_grid(0.5, 4.0, 2.0, 5, 2).unwrap();
    assert_eq!(rows.len(), 25);
    for r in &rows {
        assert!((r.residual - (r.l1 - r.expansion)).abs() < 1e-12);
        assert!((r.lambda - (1.0 + r.xi * r.xi + r.v * r.v / 4.0)).abs() < 1e-15);
    }
}
