use rayon::prelude::*;

use super::{kernel, TransportProblem};
use crate::error::{Error, Result};
use crate::functions::quadrature::GaussRule;
use crate::functions::{poly, CompactInterval, GridFunction, PiecewiseFunction};
use crate::semigroup::TranslationSystem;

/// `z -> int_{-inf}^z f` for a compactly supported piecewise polynomial.
#[derive(Debug, Clone)]
struct Primitive {
    breakpoints: Vec<f64>,
    /// Antiderivative of each bounded piece, normalized to vanish at its left end.
    pieces: Vec<Vec<f64>>,
    /// Cumulative integral at each breakpoint.
    cumulative: Vec<f64>,
}

impl Primitive {
    fn new(f: &PiecewiseFunction) -> Self {
        let b = f.breakpoints().to_vec();
        let mut pieces = Vec::with_capacity(b.len().saturating_sub(1));
        let mut cumulative = vec![0.0];
        for (i, w) in b.windows(2).enumerate() {
            let mut anti = poly::antiderivative(&f.pieces()[i + 1]);
            let offset = poly::eval(&anti, w[0]);
            anti[0] -= offset;
            cumulative.push(cumulative[i] + poly::integrate(&f.pieces()[i + 1], w[0], w[1]));
            pieces.push(anti);
        }
        Self { breakpoints: b, pieces, cumulative }
    }

    fn eval(&self, z: f64) -> f64 {
        let b = &self.breakpoints;
        if b.is_empty() || z <= b[0] {
            return 0.0;
        }
        if z >= b[b.len() - 1] {
            return self.cumulative[b.len() - 1];
        }
        let i = b.partition_point(|&x| x <= z) - 1;
        self.cumulative[i] + poly::eval(&self.pieces[i], z)
    }
}

/// Scalar Volterra solution `phi(tau) = Phi(u(tau))` and the field it generates.
///
/// Solves `phi(tau) = Phi(u0(. + tau)) + int_0^tau phi(r) kappa(tau - r) dr`
/// by product-trapezoid stepping (`phi` linear on each step, `kappa` integrated
/// by Gauss–Legendre between its breakpoints), then evaluates
/// `u(tau, x) = u0(x + tau) + int_0^tau phi(r) g(x + tau - r) dr`
/// exactly against the piecewise-linear `phi` through primitives of `g`.
#[derive(Debug, Clone)]
pub struct OracleSolution {
    pub dt: f64,
    pub phi: Vec<f64>,
    u0: PiecewiseFunction,
    hull: CompactInterval,
    g1: Primitive,
    gy: Primitive,
}

impl OracleSolution {
    pub fn t_end(&self) -> f64 {
        self.dt * (self.phi.len() - 1) as f64
    }

    /// `u(t_n, x)`.
    pub fn value(&self, n: usize, x: f64) -> f64 {
        let dt = self.dt;
        let tau = n as f64 * dt;
        let mut acc = self.u0.eval(x + tau);
        // cells [t_j, t_j+1] whose image x + tau - r meets the support of g
        let first = (((x + tau - self.hull.hi) / dt).floor() - 1.0).max(0.0) as usize;
        let last = ((((x + tau - self.hull.lo) / dt).ceil() + 1.0).max(0.0) as usize).min(n);
        for j in first..last {
            let (i0, i1) = self.cell(x + tau - j as f64 * dt);
            acc += self.phi[j] * (i0 - i1) + self.phi[j + 1] * i1;
        }
        acc
    }

    /// `u(t_end, x)`.
    pub fn eval(&self, x: f64) -> f64 {
        self.value(self.phi.len() - 1, x)
    }

    /// `(I0, I1)` for the step ending at `z`: `int_{z-dt}^z g` and `int_{z-dt}^z (z - y) g(y) dy / dt`.
    fn cell(&self, z: f64) -> (f64, f64) {
        let zb = z - self.dt;
        let (ga, gb) = (self.g1.eval(z), self.g1.eval(zb));
        let i0 = ga - gb;
        (i0, (z * i0 - (self.gy.eval(z) - self.gy.eval(zb))) / self.dt)
    }

    /// `u(t_n)` sampled on the system grid.
    ///
    /// When `dt` is a whole number of grid steps, the step integrals depend
    /// only on the lattice point `x_i + t_n - t_j` and are tabulated once.
    pub fn to_grid(&self, sys: &TranslationSystem, n: usize) -> GridFunction {
        let template = sys.sample(&PiecewiseFunction::zero());
        let ratio = (self.dt / sys.spacing).round();
        if ratio < 1.0 || (ratio * sys.spacing - self.dt).abs() > 1e-9 * self.dt {
            let values = (0..sys.count).into_par_iter().map(|i| self.value(n, sys.node(i))).collect();
            return GridFunction { values, ..template };
        }
        let r = ratio as usize;
        let tau = n as f64 * self.dt;
        let table: Vec<(f64, f64)> =
            (0..sys.count + r * n + 1).into_par_iter().map(|q| self.cell(sys.node(q))).collect();
        let values = (0..sys.count)
            .into_par_iter()
            .map(|i| {
                let mut acc = self.u0.eval(sys.node(i) + tau);
                for j in 0..n {
                    let (i0, i1) = table[i + r * (n - j)];
                    acc += self.phi[j] * (i0 - i1) + self.phi[j + 1] * i1;
                }
                acc
            })
            .collect();
        GridFunction { values, ..template }
    }

    /// `max |f(x_i) - u(t_n, x_i)|` over grid nodes inside the system window.
    pub fn window_distance(&self, sys: &TranslationSystem, f: &GridFunction, n: usize) -> f64 {
        (0..f.count())
            .into_par_iter()
            .filter(|&i| sys.window.contains(f.node(i)))
            .map(|i| (f.values[i] - self.value(n, f.node(i))).abs())
            .reduce(|| 0.0, f64::max)
    }
}

/// Breakpoints of `kappa(s) = int g(x + s) dmu(x)`.
fn kernel_breaks(prob: &TransportProblem) -> Vec<f64> {
    let gb = prob.g.breakpoints();
    let mut out: Vec<f64> = prob.measure.atoms().iter().flat_map(|a| gb.iter().map(move |b| b - a.location)).collect();
    if let Some(d) = prob.measure.density() {
        out.extend(d.breakpoints().iter().flat_map(|c| gb.iter().map(move |b| b - c)));
    }
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

/// Solve the scalar Volterra equation on `[0, t]` with step `dt`.
pub fn oracle_solve(prob: &TransportProblem, t: f64, dt: f64) -> Result<OracleSolution> {
    if !(dt > 0.0) || !(t >= 0.0) {
        return Err(Error::InvalidInput(format!("oracle needs dt > 0 and t >= 0, got dt = {dt}, t = {t}")));
    }
    let steps = (t / dt).round();
    if (steps * dt - t).abs() > 1e-9 * dt.max(t) {
        return Err(Error::OffGrid { t, spacing: dt });
    }
    let steps = steps as usize;
    let hull = prob
        .g
        .support_hull()
        .ok_or_else(|| Error::InvalidInput("g must have compact support".into()))?;
    let line = PiecewiseFunction::new(vec![hull.lo, hull.hi], vec![vec![0.0], vec![0.0, 1.0], vec![0.0]])
        .unwrap_or_else(|_| PiecewiseFunction::zero());
    let g1 = Primitive::new(&prob.g);
    let gy = Primitive::new(&prob.g.mul(&line));

    let rule = GaussRule::new(8);
    let breaks = kernel_breaks(prob);
    // ka[m], kb[m]: weights of phi at the far and near end of a step, lag m
    let (ka, kb): (Vec<f64>, Vec<f64>) = (0..=steps.max(1))
        .into_par_iter()
        .map(|m| {
            if m == 0 {
                return (0.0, 0.0);
            }
            let (lo, hi) = ((m - 1) as f64 * dt, m as f64 * dt);
            let near = rule.integrate_split(|s| kernel(&prob.measure, &prob.g, s) * (hi - s) / dt, lo, hi, &breaks);
            let far = rule.integrate_split(|s| kernel(&prob.measure, &prob.g, s) * (s - lo) / dt, lo, hi, &breaks);
            (far, near)
        })
        .unzip();
    let diagonal = 1.0 - kb[1];
    if !(diagonal > 0.0) {
        return Err(Error::StepSize { diagonal });
    }

    let forcing: Vec<f64> = (0..=steps)
        .into_par_iter()
        .map(|n| prob.measure.pair(&prob.u0.shift(n as f64 * dt)))
        .collect();
    let mut phi = Vec::with_capacity(steps + 1);
    phi.push(forcing[0]);
    for n in 1..=steps {
        let mut rhs = forcing[n] + phi[0] * ka[n];
        for j in 1..n {
            rhs += phi[j] * (ka[n - j] + kb[n - j + 1]);
        }
        phi.push(rhs / diagonal);
    }
    Ok(OracleSolution { dt, phi, u0: prob.u0.clone(), hull, g1, gy })
}
