use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::quadrature::GaussRule;
use super::{CompactInterval, GridFunction, PiecewiseFunction};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub location: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, Deserialize)]
struct RawMeasure {
    #[serde(default)]
    atoms: Vec<Atom>,
    #[serde(default)]
    density: Option<PiecewiseFunction>,
}

/// Finite signed measure: point masses plus a compactly supported piecewise-polynomial density.
///
/// `pair` is the functional `f -> int f dmu`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMeasure")]
pub struct BoundedMeasure {
    atoms: Vec<Atom>,
    density: Option<PiecewiseFunction>,
}

impl TryFrom<RawMeasure> for BoundedMeasure {
    type Error = Error;

    fn try_from(raw: RawMeasure) -> Result<Self> {
        Self::new(raw.atoms, raw.density)
    }
}

fn cell_rule() -> &'static GaussRule {
    static RULE: OnceLock<GaussRule> = OnceLock::new();
    RULE.get_or_init(|| GaussRule::new(4))
}

fn piece_rule() -> &'static GaussRule {
    static RULE: OnceLock<GaussRule> = OnceLock::new();
    RULE.get_or_init(|| GaussRule::new(8))
}

impl BoundedMeasure {
    pub fn new(atoms: Vec<Atom>, density: Option<PiecewiseFunction>) -> Result<Self> {
        if atoms.iter().any(|a| !a.location.is_finite() || !a.weight.is_finite()) {
            return Err(Error::InvalidInput("atom location and weight must be finite".into()));
        }
        if let Some(d) = &density {
            if d.support_hull().is_none() {
                return Err(Error::InvalidInput("measure density must have compact support".into()));
            }
        }
        Ok(Self { atoms, density })
    }

    pub fn zero() -> Self {
        Self { atoms: Vec::new(), density: None }
    }

    pub fn dirac(location: f64) -> Self {
        Self::atomic(&[(location, 1.0)])
    }

    pub fn atomic(atoms: &[(f64, f64)]) -> Self {
        Self {
            atoms: atoms.iter().map(|&(location, weight)| Atom { location, weight }).collect(),
            density: None,
        }
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn density(&self) -> Option<&PiecewiseFunction> {
        self.density.as_ref()
    }

    pub fn is_zero(&self) -> bool {
        self.atoms.iter().all(|a| a.weight == 0.0)
            && self.density.as_ref().is_none_or(|d| d.integral_abs() == 0.0)
    }

    /// `|mu|(R)`.
    pub fn total_variation(&self) -> f64 {
        let atoms: f64 = self.atoms.iter().map(|a| a.weight.abs()).sum();
        atoms + self.density.as_ref().map_or(0.0, |d| d.integral_abs())
    }

    /// `mu(R)`, the pairing with the constant one.
    pub fn total_mass(&self) -> f64 {
        let atoms: f64 = self.atoms.iter().map(|a| a.weight).sum();
        atoms + self.density.as_ref().map_or(0.0, |d| d.integral())
    }

    /// Smallest interval carrying the measure.
    pub fn support_hull(&self) -> Option<CompactInterval> {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for a in self.atoms.iter().filter(|a| a.weight != 0.0) {
            lo = lo.min(a.location);
            hi = hi.max(a.location);
        }
        if let Some(hull) = self.density.as_ref().and_then(|d| d.support_hull()) {
            if hull.hi > hull.lo {
                lo = lo.min(hull.lo);
                hi = hi.max(hull.hi);
            }
        }
        (lo <= hi).then_some(CompactInterval { lo, hi })
    }

    /// Exact pairing with a piecewise polynomial.
    pub fn pair(&self, f: &PiecewiseFunction) -> f64 {
        let atoms: f64 = self.atoms.iter().map(|a| a.weight * f.eval(a.location)).sum();
        atoms + self.density.as_ref().map_or(0.0, |d| d.mul(f).integral())
    }

    /// Pairing with an arbitrary function, smooth between `breaks`.
    ///
    /// Exact when `f` is a polynomial of degree at most `15 - deg(density)` between breaks.
    pub fn pair_fn<F: Fn(f64) -> f64>(&self, f: F, breaks: &[f64]) -> f64 {
        let atoms: f64 = self.atoms.iter().map(|a| a.weight * f(a.location)).sum();
        let Some(d) = &self.density else { return atoms };
        let mut all: Vec<f64> = d.breakpoints().to_vec();
        all.extend_from_slice(breaks);
        let (lo, hi) = (d.breakpoints()[0], d.breakpoints()[d.breakpoints().len() - 1]);
        atoms + piece_rule().integrate_split(|y| d.eval(y) * f(y), lo, hi, &all)
    }

    /// Pairing with the translate `x -> f(x + shift)` of a grid function.
    pub fn pair_grid_shifted(&self, f: &GridFunction, shift: f64) -> f64 {
        let atoms: f64 = self.atoms.iter().map(|a| a.weight * f.eval(a.location + shift)).sum();
        let Some(d) = &self.density else { return atoms };
        let bps = d.breakpoints();
        let mut total = 0.0;
        for w in bps.windows(2) {
            let (a, b) = (w[0], w[1]);
            // grid cells in shifted coordinates
            let first = ((a + shift - f.origin) / f.spacing).floor();
            let last = ((b + shift - f.origin) / f.spacing).ceil();
            let mut k = first;
            while k < last {
                let cl = (f.origin + k * f.spacing - shift).max(a);
                let cr = (f.origin + (k + 1.0) * f.spacing - shift).min(b);
                if cr > cl {
                    total += cell_rule().integrate(|y| d.eval(y) * f.eval(y + shift), cl, cr);
                }
                k += 1.0;
            }
        }
        atoms + total
    }

    pub fn pair_grid(&self, f: &GridFunction) -> f64 {
        self.pair_grid_shifted(f, 0.0)
    }
}
