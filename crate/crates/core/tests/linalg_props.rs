mod common;

use blockjacobi::linalg::{
    eigh, op_norm, opp_power, positive_part, positive_projector, Hermitian, PowerExponent,
};
use common::{random_hermitian, random_matrix, rng};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn eigh_round_trip(seed in any::<u64>(), d in 1usize..=12) {
        let mut r = rng(seed);
        let h = random_hermitian(&mut r, d);
        let e = eigh(&h);
        let err = (e.reconstruct().as_matrix() - h.as_matrix()).max_abs();
        prop_assert!(err <= 1e-12 * (1.0 + h.norm()) * d as f64, "err {err:e}");
        prop_assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn positive_part_times_pinv_is_projector(seed in any::<u64>(), d in 1usize..=10) {
        let mut r = rng(seed);
        let h = random_hermitian(&mut r, d);
        let floor = 1e-12 * (1.0 + h.norm());
        let prod = positive_part(&h).as_matrix() * opp_power(&h, PowerExponent::NegOne, Some(floor)).as_matrix();
        let proj = positive_projector(&h, floor);
        prop_assert!((&prod - proj.as_matrix()).max_abs() <= 1e-9);
    }

    #[test]
    fn inverse_square_root_squared(seed in any::<u64>(), d in 1usize..=10) {
        let mut r = rng(seed);
        let h = random_hermitian(&mut r, d);
        let s = opp_power(&h, PowerExponent::NegHalf, None);
        let sq = s.as_matrix() * s.as_matrix();
        let inv = opp_power(&h, PowerExponent::NegOne, None);
        // entries scale like the inverse of the smallest positive eigenvalue
        let scale = 1.0 + inv.norm();
        prop_assert!((&sq - inv.as_matrix()).max_abs() <= 1e-9 * scale);
    }

    #[test]
    fn op_norm_of_adjoint(seed in any::<u64>(), rows in 1usize..=8, cols in 1usize..=8) {
        let mut r = rng(seed);
        let m = random_matrix(&mut r, rows, cols);
        prop_assert!((op_norm(&m) - op_norm(&m.adjoint())).abs() <= 1e-10 * (1.0 + op_norm(&m)));
        prop_assert!(op_norm(&m) <= m.frobenius() * (1.0 + 1e-12));
    }

    #[test]
    fn positive_part_is_psd(seed in any::<u64>(), d in 1usize..=10) {
        let mut r = rng(seed);
        let h = random_hermitian(&mut r, d);
        let p = positive_part(&h);
        prop_assert!(p.min_eigenvalue() >= -1e-12 * (1.0 + h.norm()));
        let neg = Hermitian::new(p.as_matrix() - h.as_matrix()).unwrap();
        prop_assert!(neg.min_eigenvalue() >= -1e-12 * (1.0 + h.norm()));
    }
}
