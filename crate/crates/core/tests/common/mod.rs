#![allow(dead_code)]

use blockjacobi::linalg::{Hermitian, Matrix, C64};
use blockjacobi::model::TruncatedJacobi;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| {
        C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    })
}

pub fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> Hermitian {
    Hermitian::new(random_matrix(rng, n, n)).unwrap()
}

/// Random section with `d * blocks <= max_size`.
pub fn random_section(rng: &mut ChaCha8Rng, max_size: usize) -> TruncatedJacobi {
    let d = rng.random_range(1..=4usize);
    let blocks = rng.random_range(2..=(max_size / d).max(2));
    let scale = rng.random_range(0.5..5.0);
    let b = (0..blocks)
        .map(|_| random_hermitian(rng, d).scale(scale))
        .collect();
    let a = (0..blocks - 1).map(|_| random_matrix(rng, d, d)).collect();
    TruncatedJacobi::from_blocks("random", b, a).unwrap()
}
