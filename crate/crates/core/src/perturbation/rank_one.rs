use std::sync::Arc;

use rayon::prelude::*;

use super::{check_trajectory, Coupling, PerturbationOperator, TimeGrid, VectorTrajectory};
use crate::error::{Error, Result};
use crate::functions::quadrature::GaussRule;
use crate::functions::{BoundedMeasure, CompactInterval, GridFunction, PiecewiseFunction};
use crate::semigroup::{ExtrapolatedElement, LinearSpace, Semigroup, TranslationSystem};

/// Rank-one perturbation `B f = Phi(f) g` of left translation.
///
/// The Volterra integral is evaluated pointwise,
/// `(V_B F)(t)(x) = int_0^t Phi(F(r)) g(x + t - r) dr`,
/// with `Phi(F(r))` interpolated linearly between time nodes and `g`
/// integrated exactly against the resulting hat weights. Neumann terms are
/// carried as their scalar traces `phi_k(r) = Phi((V^k T)(r) x)`.
#[derive(Debug, Clone)]
pub struct RankOneCoupling {
    sys: TranslationSystem,
    measure: BoundedMeasure,
    g: PiecewiseFunction,
    h_reg: Option<PiecewiseFunction>,
    grid: TimeGrid,
    /// Grid nodes per time step.
    ratio: usize,
    /// Hat weights of `g` over `[x_q - dt, x_q]`, indexed by grid position `q`.
    wa: Vec<f64>,
    wb: Vec<f64>,
    /// Hat weights of the kernel `kappa(s) = Phi(g(. + s))` over `[(m - 1) dt, m dt]`.
    ka: Vec<f64>,
    kb: Vec<f64>,
    g_sup: f64,
}

/// One Neumann term for a rank-one coupling.
#[derive(Debug, Clone)]
pub struct RankOneTerm {
    /// The input `x` for the zeroth term `T(.) x`.
    base: Option<GridFunction>,
    /// `phi_{k-1}`, from which the term is materialized.
    source: Option<Arc<Vec<f64>>>,
    /// `phi_k` at the time nodes.
    pub phi: Arc<Vec<f64>>,
}

impl RankOneCoupling {
    pub fn new(
        sys: TranslationSystem,
        measure: BoundedMeasure,
        g: PiecewiseFunction,
        h_reg: Option<PiecewiseFunction>,
        grid: TimeGrid,
    ) -> Result<Self> {
        let dt = grid.dt();
        sys.check_step(dt)?;
        let ratio = sys.steps_for(dt)?;
        if g.support_hull().is_none() {
            return Err(Error::InvalidInput("g must have compact support".into()));
        }
        let len = sys.count + ratio * grid.steps + 1;
        let (wa, wb): (Vec<f64>, Vec<f64>) = (0..len)
            .into_par_iter()
            .map(|q| {
                let hi = sys.origin + q as f64 * sys.spacing;
                let (mass, first) = g.hat_moments(hi - dt, hi);
                (mass - first, first)
            })
            .unzip();
        let (ka, kb): (Vec<f64>, Vec<f64>) = (0..=grid.steps)
            .into_par_iter()
            .map(|m| {
                if m == 0 {
                    return (0.0, 0.0);
                }
                let hi = m as f64 * dt;
                let breaks: Vec<f64> = g.breakpoints().iter().flat_map(|b| [b - hi, b - hi + dt]).collect();
                let mass = measure.pair_fn(|y| g.hat_moments(y + hi - dt, y + hi).0, &breaks);
                let first = measure.pair_fn(|y| g.hat_moments(y + hi - dt, y + hi).1, &breaks);
                (mass - first, first)
            })
            .unzip();
        let g_sup = g.sup_norm();
        Ok(Self { sys, measure, g, h_reg, grid, ratio, wa, wb, ka, kb, g_sup })
    }

    pub fn measure(&self) -> &BoundedMeasure {
        &self.measure
    }

    pub fn g(&self) -> &PiecewiseFunction {
        &self.g
    }

    pub fn h_reg(&self) -> Option<&PiecewiseFunction> {
        self.h_reg.as_ref()
    }

    /// `Phi(f)` for a grid function.
    pub fn phi(&self, f: &GridFunction) -> f64 {
        self.measure.pair_grid(f)
    }

    /// `int_0^{t_n} phi(r) g(x_i + t_n - r) dr` on all grid nodes, `phi` linear between time nodes.
    pub fn field(&self, phi: &[f64], n: usize) -> GridFunction {
        let values = (0..self.sys.count)
            .into_par_iter()
            .map(|i| {
                let mut acc = 0.0;
                for j in 0..n {
                    let q = i + self.ratio * (n - j);
                    acc += phi[j] * self.wa[q] + phi[j + 1] * self.wb[q];
                }
                acc
            })
            .collect();
        GridFunction {
            origin: self.sys.origin,
            spacing: self.sys.spacing,
            values,
            extension: crate::functions::Extension::ConstantContinuation,
        }
    }

    /// `phi_{k+1}(t_n) = int_0^{t_n} phi_k(r) kappa(t_n - r) dr`.
    fn convolve(&self, phi: &[f64]) -> Vec<f64> {
        (0..=self.grid.steps)
            .into_par_iter()
            .map(|n| (0..n).map(|j| phi[j] * self.ka[n - j] + phi[j + 1] * self.kb[n - j]).sum())
            .collect()
    }

    fn trapezoid_abs(&self, phi: &[f64]) -> f64 {
        let dt = self.grid.dt();
        phi.windows(2).map(|w| 0.5 * dt * (w[0].abs() + w[1].abs())).sum()
    }

    fn h_grid(&self) -> Result<GridFunction> {
        let h = self.h_reg.as_ref().ok_or(Error::MissingRegularization)?;
        Ok(self.sys.sample(h))
    }

    /// `int_0^inf e^{-lambda r} g(x + r) dr` on the grid, exact up to Gauss–Legendre rounding.
    pub fn laplace_of_g(&self, lambda: f64) -> GridFunction {
        let rule = GaussRule::new(8);
        let hull = self.g.support_hull().expect("checked at construction");
        self.sys.from_fn(|x| {
            let lo = (hull.lo - x).max(0.0);
            let hi = hull.hi - x;
            let breaks: Vec<f64> = self.g.breakpoints().iter().map(|b| b - x).collect();
            // split further so the exponential is resolved on long intervals
            let mut all = breaks;
            let mut r = lo;
            while r < hi {
                all.push(r);
                r += 0.25;
            }
            rule.integrate_split(|r| (-lambda * r).exp() * self.g.eval(x + r), lo, hi, &all)
        })
    }
}

impl Coupling for RankOneCoupling {
    type Sys = TranslationSystem;
    type Term = RankOneTerm;

    fn system(&self) -> &TranslationSystem {
        &self.sys
    }

    fn grid(&self) -> TimeGrid {
        self.grid
    }

    fn regrid(&self, t0: f64, steps: usize) -> Result<Self> {
        Self::new(self.sys.clone(), self.measure.clone(), self.g.clone(), self.h_reg.clone(), TimeGrid::new(t0, steps)?)
    }

    fn operator(&self) -> PerturbationOperator {
        PerturbationOperator::RankOne { measure: self.measure.clone(), g: self.g.clone(), h_reg: self.h_reg.clone() }
    }

    /// `||g|| |mu|(R) t0`; equals `2 |mu|(R) t0` for the canonical `g`.
    fn analytic_bound(&self) -> Option<f64> {
        Some(self.g_sup * self.measure.total_variation() * self.grid.t0)
    }

    fn continuity_constant(&self) -> Option<f64> {
        self.h_reg.as_ref().map(|h| self.measure.total_variation() * h.sup_norm())
    }

    fn is_trivial(&self) -> bool {
        self.measure.is_zero() || self.g_sup == 0.0
    }

    fn dependence_window(&self, window: CompactInterval) -> CompactInterval {
        self.measure.support_hull().unwrap_or(window)
    }

    fn perturb(&self, x: &GridFunction) -> Result<ExtrapolatedElement<GridFunction>> {
        let h = self.h_grid()?;
        Ok(ExtrapolatedElement { regularized: h.scaled(self.phi(x)) })
    }

    fn base_term(&self, x: &GridFunction) -> Result<RankOneTerm> {
        if !x.same_grid(&self.sys.sample(&PiecewiseFunction::zero())) {
            return Err(Error::InvalidInput("grid function does not live on the system grid".into()));
        }
        let phi = (0..=self.grid.steps)
            .into_par_iter()
            .map(|j| self.measure.pair_grid_shifted(x, self.grid.time(j)))
            .collect();
        Ok(RankOneTerm { base: Some(x.clone()), source: None, phi: Arc::new(phi) })
    }

    fn next_term(&self, term: &RankOneTerm) -> RankOneTerm {
        RankOneTerm { base: None, source: Some(term.phi.clone()), phi: Arc::new(self.convolve(&term.phi)) }
    }

    /// Exact for the zeroth term; `||g|| int_0^{t0} |phi_{k-1}|` afterwards.
    fn term_norm(&self, term: &RankOneTerm) -> f64 {
        match (&term.base, &term.source) {
            (Some(x), _) => x.sup_norm(),
            (None, Some(src)) => self.g_sup * self.trapezoid_abs(src),
            (None, None) => 0.0,
        }
    }

    fn term_value(&self, term: &RankOneTerm, node: usize) -> Result<GridFunction> {
        if node > self.grid.steps {
            return Err(Error::InvalidInput(format!("node {node} outside the time grid")));
        }
        match (&term.base, &term.source) {
            (Some(x), _) => self.sys.apply(self.grid.time(node), x),
            (None, Some(src)) => Ok(self.field(src, node)),
            (None, None) => Err(Error::InvalidInput("empty term".into())),
        }
    }

    fn series_value(&self, terms: &[RankOneTerm], node: usize) -> Result<GridFunction> {
        let mut acc = self.term_value(&terms[0], node)?;
        if terms.len() > 1 {
            let mut total = vec![0.0; self.grid.steps + 1];
            for t in &terms[1..] {
                if let Some(src) = &t.source {
                    for (a, b) in total.iter_mut().zip(src.iter()) {
                        *a += b;
                    }
                }
            }
            acc.axpy(1.0, &self.field(&total, node));
        }
        Ok(acc)
    }

    fn volterra(&self, traj: &VectorTrajectory<GridFunction>, node: usize) -> Result<GridFunction> {
        check_trajectory(self.grid, traj, node)?;
        let phi: Vec<f64> = traj.nodes[..=node].par_iter().map(|f| self.phi(f)).collect();
        Ok(self.field(&phi, node))
    }

    /// `sum'_j dt Phi(F(r_j)) T(t - r_j) h`, the trapezoid rule in regularized coordinates.
    fn volterra_regularized(
        &self,
        traj: &VectorTrajectory<GridFunction>,
        node: usize,
    ) -> Result<ExtrapolatedElement<GridFunction>> {
        check_trajectory(self.grid, traj, node)?;
        let h = self.h_grid()?;
        let dt = self.grid.dt();
        let mut u = h.zero_like();
        for j in 0..=node {
            if node == 0 {
                break;
            }
            let w = if j == 0 || j == node { 0.5 * dt } else { dt };
            let shifted = h.shifted((self.ratio * (node - j)) as isize);
            u.axpy(w * self.phi(&traj.nodes[j]), &shifted);
        }
        Ok(ExtrapolatedElement { regularized: u })
    }

    fn perturbed_resolvent(&self, lambda: f64, x: &GridFunction) -> Result<GridFunction> {
        if !(lambda > 0.0) {
            return Err(Error::ResolventDomain { lambda, growth_bound: 0.0 });
        }
        Ok(self.laplace_of_g(lambda).scaled(self.phi(x)))
    }
}
