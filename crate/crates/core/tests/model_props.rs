mod common;

use blockjacobi::linalg::C64;
use blockjacobi::model::{block_at, truncate, CoefficientFamily, CATALOG};
use common::rng;
use proptest::prelude::*;
use rand::Rng;

fn inner(x: &[C64], y: &[C64]) -> C64 {
    x.iter().zip(y).map(|(a, b)| a * b.conj()).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sections_are_hermitian(seed in any::<u64>(), which in 0usize..7, n in 2usize..=200) {
        let f = CoefficientFamily::named(CATALOG[which].name, &[]).unwrap();
        let t = truncate(&f, n).unwrap();
        let mut r = rng(seed);
        let mut vec = || (0..t.size()).map(|_| C64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0))).collect::<Vec<_>>();
        let (v, w) = (vec(), vec());
        let lhs = inner(&t.apply(&v).unwrap(), &w);
        let rhs = inner(&t.apply(&w).unwrap(), &v).conj();
        let scale = 1.0 + t.max_block_norm() * t.size() as f64;
        prop_assert!((lhs - rhs).norm() <= 1e-10 * scale);
    }

    #[test]
    fn generators_are_deterministic(which in 0usize..7, n in 1usize..=100_000) {
        let f = CoefficientFamily::named(CATALOG[which].name, &[]).unwrap();
        let (x, y) = (block_at(&f, n).unwrap(), block_at(&f, n).unwrap());
        prop_assert_eq!(x.a.data(), y.a.data());
        prop_assert_eq!(x.b.as_matrix().data(), y.b.as_matrix().data());
    }

    #[test]
    fn parity_structure(k in 1usize..=100_000) {
        let e1 = CoefficientFamily::example1(0.75, 1.0).unwrap();
        prop_assert_eq!(e1.scalar_at(2 * k).unwrap().unwrap().1, 0.0);
        let s3 = CoefficientFamily::step3(0.75, 1.0).unwrap();
        let b = s3.scalar_at(k).unwrap().unwrap().1;
        if k % 3 == 0 {
            prop_assert!(b > 0.0);
        } else {
            prop_assert_eq!(b, 0.0);
        }
    }
}
