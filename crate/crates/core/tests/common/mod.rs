#![allow(dead_code)]

use ap_manifold::linalg::{haar_orthogonal_from, SpdPoint, SymMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

pub fn random_sym<R: Rng>(n: usize, rng: &mut R) -> SymMatrix {
    SymMatrix::from_fn(n, |_, _| StandardNormal.sample(rng))
}

/// SPD matrix with log-uniform spectrum in `[1/spread, spread]`.
pub fn random_spd<R: Rng>(n: usize, spread: f64, rng: &mut R) -> SpdPoint {
    let q = haar_orthogonal_from(n, rng);
    let lam: Vec<f64> = (0..n).map(|_| spread.powf(rng.random_range(-1.0..1.0))).collect();
    SpdPoint::from_eigen(q, lam).unwrap()
}

pub fn rel_err(a: &SymMatrix, b: &SymMatrix) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}
