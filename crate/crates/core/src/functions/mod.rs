//! Grid functions, piecewise polynomials, bounded measures and the compact-set seminorms.

mod grid;
mod measure;
mod piecewise;
pub mod poly;
pub mod quadrature;

use serde::{Deserialize, Serialize};

pub use grid::{Extension, GridFunction};
pub use measure::{Atom, BoundedMeasure};
pub use piecewise::{Jump, PiecewiseFunction, Side};

use crate::error::{Error, Result};

/// Closed interval `[lo, hi]`, the index set of the seminorm `p_K`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompactInterval {
    pub lo: f64,
    pub hi: f64,
}

impl CompactInterval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidInput(format!("invalid interval [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn contains_interval(&self, other: &Self) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn widened(&self, by: f64) -> Self {
        Self { lo: self.lo - by, hi: self.hi + by }
    }
}

/// Functions of one real variable with the norms of `BC(R)`.
pub trait RealFunction {
    fn eval(&self, x: f64) -> f64;
    fn sup_norm(&self) -> f64;
    fn seminorm(&self, k: CompactInterval) -> f64;
}

impl RealFunction for PiecewiseFunction {
    fn eval(&self, x: f64) -> f64 {
        PiecewiseFunction::eval(self, x)
    }
    fn sup_norm(&self) -> f64 {
        PiecewiseFunction::sup_norm(self)
    }
    fn seminorm(&self, k: CompactInterval) -> f64 {
        PiecewiseFunction::seminorm(self, k)
    }
}

impl RealFunction for GridFunction {
    fn eval(&self, x: f64) -> f64 {
        GridFunction::eval(self, x)
    }
    fn sup_norm(&self) -> f64 {
        GridFunction::sup_norm(self)
    }
    fn seminorm(&self, k: CompactInterval) -> f64 {
        GridFunction::seminorm(self, k)
    }
}

/// Sample a piecewise function on a grid with constant continuation.
pub fn to_grid(f: &PiecewiseFunction, origin: f64, spacing: f64, count: usize) -> Result<GridFunction> {
    GridFunction::sample(f, origin, spacing, count)
}
