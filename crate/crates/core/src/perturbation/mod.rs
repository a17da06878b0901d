//! The Volterra operator `(V_B F)(t) = int_0^t T_{-1}(t - r) B F(r) dr`, the Neumann
//! series `S = sum_k V_B^k T` on `[0, t0]`, and diagnostics built on them.
//!
//! The engine works on trajectories `r -> F(r) x` for one input `x` at a time;
//! operator-level quantities are recovered by probing (for matrices, by
//! feeding the identity block).

mod checks;
mod matrix;
mod neumann;
mod rank_one;

use serde::{Deserialize, Serialize};

pub use checks::{
    admissibility_check, comparison_check, favard_seminorm, generator_check, identity_check,
    perturbed_resolvent_check, varpar_residual, volterra_apply, volterra_apply_regularized,
    term_ratios, volterra_norm_estimate, AdmissibilityReport, ComparisonResult, ConditionA, ConditionB, ConditionC,
};
pub use matrix::MatrixCoupling;
pub use neumann::{
    guard, neumann_run, neumann_semigroup, neumann_trajectory, NeumannSeries, DEFAULT_TOL, MAX_TERMS,
};
pub use rank_one::{RankOneCoupling, RankOneTerm};

use crate::error::{Error, Result};
use crate::functions::{BoundedMeasure, CompactInterval, PiecewiseFunction};
use crate::semigroup::{ExtrapolatedElement, Semigroup};
use nalgebra::DMatrix;

/// State type of a coupling's underlying system.
pub type State<C> = <<C as Coupling>::Sys as Semigroup>::State;

/// Uniform grid `0, dt, ..., steps * dt = t0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t0: f64,
    pub steps: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, steps: usize) -> Result<Self> {
        if !(t0 > 0.0) || !t0.is_finite() || steps == 0 {
            return Err(Error::InvalidInput(format!("time grid needs t0 > 0 and steps > 0, got t0 = {t0}, steps = {steps}")));
        }
        Ok(Self { t0, steps })
    }

    /// Grid on `[0, t0]` with step `dt`; `dt` must divide `t0`.
    pub fn with_step(t0: f64, dt: f64) -> Result<Self> {
        let steps = (t0 / dt).round();
        if steps < 1.0 || (steps * dt - t0).abs() > 1e-9 * t0 {
            return Err(Error::InvalidInput(format!("time step {dt} does not divide t0 = {t0}")));
        }
        Self::new(t0, steps as usize)
    }

    pub fn dt(&self) -> f64 {
        self.t0 / self.steps as f64
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t0 * i as f64 / self.steps as f64
    }

    /// Index of the node at time `t`.
    pub fn node_of(&self, t: f64) -> Result<usize> {
        let dt = self.dt();
        let k = (t / dt).round();
        if k < 0.0 || k > self.steps as f64 || (k * dt - t).abs() > 1e-9 * dt.max(t) {
            return Err(Error::OffGrid { t, spacing: dt });
        }
        Ok(k as usize)
    }
}

/// States at the nodes of a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorTrajectory<S> {
    pub dt: f64,
    pub nodes: Vec<S>,
}

impl<S> VectorTrajectory<S> {
    pub fn from_fn<F: FnMut(f64) -> Result<S>>(grid: TimeGrid, mut f: F) -> Result<Self> {
        let nodes = (0..=grid.steps).map(|i| f(grid.time(i))).collect::<Result<Vec<_>>>()?;
        Ok(Self { dt: grid.dt(), nodes })
    }

    /// Same state at every node.
    pub fn constant(grid: TimeGrid, x: S) -> Self
    where
        S: Clone,
    {
        Self { dt: grid.dt(), nodes: vec![x; grid.steps + 1] }
    }

    pub fn t_end(&self) -> f64 {
        self.dt * (self.nodes.len() - 1) as f64
    }
}

/// The perturbation `B: X -> X_{-1}` in one of the two supported shapes.
#[derive(Debug, Clone, PartialEq)]
pub enum PerturbationOperator {
    /// Bounded `B` on `R^n`.
    Matrix(DMatrix<f64>),
    /// `B f = Phi(f) g` with `Phi(f) = int f dmu`; `h_reg` satisfies `g = h - h'`.
    RankOne {
        measure: BoundedMeasure,
        g: PiecewiseFunction,
        h_reg: Option<PiecewiseFunction>,
    },
}

/// A semigroup paired with a perturbation and a time grid on `[0, t0]`.
///
/// `Term` is the engine's storage for one Neumann term `(V^k T)(.) x` on the grid.
pub trait Coupling: Send + Sync + Sized {
    type Sys: Semigroup;
    type Term: Send + Sync + Clone;

    fn system(&self) -> &Self::Sys;
    fn grid(&self) -> TimeGrid;
    /// Same system and perturbation on another time grid.
    fn regrid(&self, t0: f64, steps: usize) -> Result<Self>;
    fn operator(&self) -> PerturbationOperator;

    /// Certified upper bound on `||V_B||` if one is known in closed form.
    fn analytic_bound(&self) -> Option<f64>;
    /// `c_B` with `||B x||_{-1} <= c_B ||x||`, when `B` is representable in `X_{-1}`.
    fn continuity_constant(&self) -> Option<f64>;
    fn is_trivial(&self) -> bool;
    /// Where the perturbation reads its input, for compact-set estimates on `window`.
    fn dependence_window(&self, window: CompactInterval) -> CompactInterval;

    /// `B x` as an element of `X_{-1}`.
    fn perturb(&self, x: &State<Self>) -> Result<ExtrapolatedElement<State<Self>>>;

    fn base_term(&self, x: &State<Self>) -> Result<Self::Term>;
    fn next_term(&self, term: &Self::Term) -> Self::Term;
    /// Upper bound on the node-sup norm of the term (exact for matrices).
    fn term_norm(&self, term: &Self::Term) -> f64;
    fn term_value(&self, term: &Self::Term, node: usize) -> Result<State<Self>>;

    /// Sum of the terms at a node.
    fn series_value(&self, terms: &[Self::Term], node: usize) -> Result<State<Self>> {
        use crate::semigroup::LinearSpace;
        let mut acc = self.term_value(&terms[0], node)?;
        for t in &terms[1..] {
            acc.axpy(1.0, &self.term_value(t, node)?);
        }
        Ok(acc)
    }

    /// `(V_B F)(t_node)` by the coupling's preferred quadrature.
    fn volterra(&self, traj: &VectorTrajectory<State<Self>>, node: usize) -> Result<State<Self>>;

    /// `(V_B F)(t_node)` assembled in regularized coordinates, before reconstruction.
    fn volterra_regularized(
        &self,
        traj: &VectorTrajectory<State<Self>>,
        node: usize,
    ) -> Result<ExtrapolatedElement<State<Self>>>;

    /// `R(lambda, A_{-1}) B x`, an element of `X`.
    fn perturbed_resolvent(&self, lambda: f64, x: &State<Self>) -> Result<State<Self>>;
}

fn check_trajectory<S>(grid: TimeGrid, traj: &VectorTrajectory<S>, node: usize) -> Result<()> {
    if (traj.dt - grid.dt()).abs() > 1e-9 * grid.dt() {
        return Err(Error::InvalidInput(format!("trajectory step {} differs from coupling step {}", traj.dt, grid.dt())));
    }
    if node >= traj.nodes.len() || node > grid.steps {
        return Err(Error::InvalidInput(format!("node {node} outside the trajectory")));
    }
    Ok(())
}
