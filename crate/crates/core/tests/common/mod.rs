//! Oracles shared by the integration tests. Nothing here calls into the engine.

#![allow(dead_code)]

use nalgebra::DMatrix;
use semiperturb::rng::{seeded, stable_matrix, uniform_matrix};

/// `exp(a)` by Taylor series after scaling to `||a|| <= 1/2`, then repeated squaring.
pub fn taylor_expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let norm = a.abs().row_sum().max();
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let scaled = a / 2f64.powi(squarings);
    let mut term = DMatrix::identity(n, n);
    let mut sum = term.clone();
    for k in 1..=30 {
        term = &term * &scaled / k as f64;
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// Largest singular value, via power iteration on `m^T m`.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    let g = m.transpose() * m;
    let mut v = DMatrix::from_element(g.ncols(), 1, 1.0);
    v[(0, 0)] += 0.37;
    let mut est = 0.0;
    for _ in 0..500 {
        let w = &g * &v;
        let nrm = w.norm();
        if nrm == 0.0 {
            return 0.0;
        }
        v = w / nrm;
        est = nrm;
    }
    est.sqrt()
}

/// `(A, B)` with `A` stable and `||B|| = b_norm`.
pub fn random_pair(seed: u64, n: usize, margin: f64, b_norm: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let mut rng = seeded(seed);
    let a = stable_matrix(&mut rng, n, margin);
    let b = uniform_matrix(&mut rng, n, n);
    let s = b.singular_values().max();
    (a, b * (b_norm / s))
}
