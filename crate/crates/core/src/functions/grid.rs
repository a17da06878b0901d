use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{CompactInterval, PiecewiseFunction};
use crate::error::{Error, Result};

/// How a grid function continues beyond its nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Extension {
    #[default]
    ConstantContinuation,
    Zero,
}

/// Samples of a bounded continuous function on `origin + i * spacing`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    pub origin: f64,
    pub spacing: f64,
    pub values: Vec<f64>,
    #[serde(default)]
    pub extension: Extension,
}

impl GridFunction {
    pub fn new(origin: f64, spacing: f64, values: Vec<f64>, extension: Extension) -> Result<Self> {
        if !(spacing > 0.0) || !spacing.is_finite() || !origin.is_finite() {
            return Err(Error::InvalidInput(format!("grid spacing must be positive, got {spacing}")));
        }
        if values.is_empty() {
            return Err(Error::InvalidInput("grid needs at least one node".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("grid values must be finite".into()));
        }
        Ok(Self { origin, spacing, values, extension })
    }

    pub fn from_fn<F: Fn(f64) -> f64>(origin: f64, spacing: f64, count: usize, f: F) -> Result<Self> {
        let values = (0..count).map(|i| f(origin + i as f64 * spacing)).collect();
        Self::new(origin, spacing, values, Extension::ConstantContinuation)
    }

    /// Sample a piecewise function at the nodes, constant continuation outside.
    pub fn sample(f: &PiecewiseFunction, origin: f64, spacing: f64, count: usize) -> Result<Self> {
        Self::from_fn(origin, spacing, count, |x| f.eval(x))
    }

    pub fn zeros_like(&self) -> Self {
        Self { values: vec![0.0; self.values.len()], ..self.clone() }
    }

    pub fn count(&self) -> usize {
        self.values.len()
    }

    pub fn node(&self, i: usize) -> f64 {
        self.origin + i as f64 * self.spacing
    }

    pub fn end(&self) -> f64 {
        self.node(self.values.len() - 1)
    }

    /// Value at integer index `i`, applying the extension rule off the grid.
    pub fn at_index(&self, i: isize) -> f64 {
        let n = self.values.len() as isize;
        if (0..n).contains(&i) {
            return self.values[i as usize];
        }
        match self.extension {
            Extension::Zero => 0.0,
            Extension::ConstantContinuation if i < 0 => self.values[0],
            Extension::ConstantContinuation => self.values[n as usize - 1],
        }
    }

    /// Linear interpolation inside the grid, extension rule outside.
    pub fn eval(&self, x: f64) -> f64 {
        let s = (x - self.origin) / self.spacing;
        let last = (self.values.len() - 1) as f64;
        if s < 0.0 || s > last {
            return match self.extension {
                Extension::Zero => 0.0,
                Extension::ConstantContinuation if s < 0.0 => self.values[0],
                Extension::ConstantContinuation => self.values[self.values.len() - 1],
            };
        }
        let i = (s.floor() as usize).min(self.values.len().saturating_sub(2));
        if self.values.len() == 1 {
            return self.values[0];
        }
        let theta = s - i as f64;
        (1.0 - theta) * self.values[i] + theta * self.values[i + 1]
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `sup_{x in K} |f(x)|`; exact for the piecewise-linear interpolant.
    pub fn seminorm(&self, k: CompactInterval) -> f64 {
        let mut best = self.eval(k.lo).abs().max(self.eval(k.hi).abs());
        let first = ((k.lo - self.origin) / self.spacing).ceil().max(0.0) as usize;
        let last = ((k.hi - self.origin) / self.spacing).floor();
        if last >= 0.0 {
            let last = (last as usize).min(self.values.len() - 1);
            for v in self.values.iter().take(last + 1).skip(first) {
                best = best.max(v.abs());
            }
        }
        best
    }

    /// `x -> f(x + k * spacing)` on the same nodes.
    pub fn shifted(&self, k: isize) -> Self {
        let values = (0..self.values.len() as isize).map(|i| self.at_index(i + k)).collect();
        Self { values, ..self.clone() }
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        self.values.len() == other.values.len()
            && (self.origin - other.origin).abs() <= 1e-12 * (1.0 + self.origin.abs())
            && (self.spacing - other.spacing).abs() <= 1e-12 * self.spacing
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "value"])?;
        for (i, v) in self.values.iter().enumerate() {
            w.write_record([format!("{:.16e}", self.node(i)), format!("{v:.16e}")])?;
        }
        w.flush()?;
        Ok(())
    }
}
