//! Semigroups perturbed by operators that map into the extrapolation space.
//!
//! Two concrete unperturbed systems are provided: left translation on bounded
//! continuous functions of the real line (sampled on a uniform grid) and the
//! matrix exponential on `R^n`. Perturbations may map into the extrapolation
//! space; the perturbed semigroup is built from the Neumann series of the
//! Volterra operator and checked against independent oracles.

// `!(x > 0.0)` is used on purpose so that NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod functions;
pub mod implemented;
pub mod perturbation;
pub mod report;
pub mod rng;
pub mod semigroup;
pub mod transport;

pub use error::{Error, Result};
