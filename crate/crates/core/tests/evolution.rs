use kacspec::core_math::HermiteCoeffs;
use kacspec::evolution::*;
use kacspec::spectrum::KacSpectrum;
use proptest::prelude::*;
use std::sync::Arc;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn norm_never_grows(c in proptest::collection::vec(-1.0f64..1.0, 21), t1 in 0.0f64..3.0, t2 in 0.0f64..3.0) {
        let sp = Arc::new(KacSpectrum::compute(0.5, 20).unwrap());
        let st = EvolutionState::new(HermiteCoeffs::from_real(&c), sp).unwrap();
        let (a, b) = (t1.min(t2), t1.max(t2));
        let na = semigroup_evolve(&st, a).unwrap().coeffs().norm();
        let nb = semigroup_evolve(&st, b).unwrap().coeffs().norm();
        prop_assert!(nb <= na * (1.0 + 1e-15));
    }

    #[test]
    fn sandwich_holds(c in proptest::collection::vec(-1.0f64..1.0, 41)) {
        let sp = KacSpectrum::compute(0.5, 40).unwrap();
        let r = coercivity_check_with(&HermiteCoeffs::from_real(&c), &sp).unwrap();
        prop_assert!(r.holds && r.c_min > 0.0);
    }
}
