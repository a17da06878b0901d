//! Seeded randomness for probe matrices and vectors.
//!
//! The generator is ChaCha8 (`rand_chacha::ChaCha8Rng`) seeded with
//! `seed_from_u64`, whose output stream is specified independently of this
//! crate, so a seed reproduces the same probes on every platform.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type ProbeRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> ProbeRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Entries uniform in `[-1, 1)`.
pub fn uniform_matrix(rng: &mut ProbeRng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

/// Random matrix shifted so its spectral abscissa equals `-margin`.
pub fn stable_matrix(rng: &mut ProbeRng, n: usize, margin: f64) -> DMatrix<f64> {
    let g = uniform_matrix(rng, n, n);
    let abscissa = crate::semigroup::spectral_abscissa(&g);
    g - DMatrix::identity(n, n) * (abscissa + margin)
}

/// Random unit column vector.
pub fn unit_vector(rng: &mut ProbeRng, n: usize) -> DMatrix<f64> {
    loop {
        let v = uniform_matrix(rng, n, 1);
        let norm = v.norm();
        if norm > 1e-3 {
            return v / norm;
        }
    }
}
