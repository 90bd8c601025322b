mod common;

use proptest::prelude::*;

use rpnm_core::constructions::{
    lb_parabola_gaussian, lb_parabola_real, rep_count, sphere_count_exact, SphereMode,
};
use rpnm_core::numtheory::Gaussian;

use common::{naive_rep_counts, rep_count_mismatches};

#[test]
fn rep_count_matches_naive_enumeration_for_small_m() {
    for m in 1..=2 {
        for r in [1.0, 0.75, 0.5] {
            let bad = rep_count_mismatches(m, r);
            assert!(bad.is_empty(), "{bad:?}");
        }
    }
}

#[test]
fn sphere_count_sums_representations_of_squares() {
    for q_max in 1..=6u64 {
        let direct: u64 = (1..=q_max as i64)
            .map(|q| rep_count(2, Gaussian::new(q * q, 0), 1.0).unwrap())
            .sum();
        assert_eq!(
            sphere_count_exact(1, q_max, 1.0, SphereMode::Real).unwrap(),
            direct
        );
    }
}

#[test]
fn witness_sets_have_their_closed_form_size() {
    for q in [1, 4, 16, 50, 200] {
        let real = lb_parabola_real(q).unwrap();
        assert_eq!(real.iter().count() as u64, real.count);
        assert!(real.iter().all(|w| w.verify(q)));
        let gaussian = lb_parabola_gaussian(q).unwrap();
        assert_eq!(gaussian.iter().count() as u64, gaussian.count);
        assert!(gaussian.iter().all(|w| w.verify(q)));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rep_count_respects_unit_symmetries(m in 1usize..=3, re in -20i64..=20, im in -20i64..=20) {
        prop_assume!(re != 0 || im != 0);
        let a = rep_count(m, Gaussian::new(re, im), 1.0).unwrap();
        prop_assert_eq!(a, rep_count(m, Gaussian::new(re, -im), 1.0).unwrap());
        prop_assert_eq!(a, rep_count(m, Gaussian::new(-re, -im), 1.0).unwrap());
    }

    #[test]
    fn rep_count_grows_with_the_radius(m in 1usize..=3, re in -15i64..=15, im in -15i64..=15) {
        prop_assume!(re != 0 || im != 0);
        let nu = Gaussian::new(re, im);
        prop_assert!(rep_count(m, nu, 0.5).unwrap() <= rep_count(m, nu, 1.0).unwrap());
    }

    #[test]
    fn rep_count_agrees_with_naive_for_random_nu(re in -8i64..=8, im in -8i64..=8) {
        prop_assume!(re != 0 || im != 0);
        let naive = naive_rep_counts(2, 1.0, 128);
        let slow = naive.get(&(re, im)).copied().unwrap_or(0);
        prop_assert_eq!(rep_count(2, Gaussian::new(re, im), 1.0).unwrap(), slow);
    }
}
