use nalgebra::DMatrix;
use rayon::prelude::*;

use super::{check_trajectory, Coupling, PerturbationOperator, TimeGrid, VectorTrajectory};
use crate::error::{Error, Result};
use crate::functions::CompactInterval;
use crate::semigroup::{op_norm, reconstruct, ExtrapolatedElement, MatrixSystem, Semigroup};

/// Bounded matrix perturbation of `exp(tA)`.
///
/// Propagators `P_m = exp(m dt A)` and `P_m B` are cached for the grid;
/// Volterra integrals use the composite trapezoid rule on the nodes.
#[derive(Debug, Clone)]
pub struct MatrixCoupling {
    sys: MatrixSystem,
    b: DMatrix<f64>,
    grid: TimeGrid,
    props: Vec<DMatrix<f64>>,
    props_b: Vec<DMatrix<f64>>,
    /// `R(1, A) B`: regularized coordinates of the range of `B`.
    r1b: DMatrix<f64>,
    sup_prop: f64,
}

impl MatrixCoupling {
    pub fn new(sys: MatrixSystem, b: DMatrix<f64>, grid: TimeGrid) -> Result<Self> {
        let n = sys.dim();
        if b.nrows() != n || b.ncols() != n {
            return Err(Error::InvalidInput(format!("B must be {n}x{n}, got {}x{}", b.nrows(), b.ncols())));
        }
        if b.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("B entries must be finite".into()));
        }
        let dt = grid.dt();
        let props: Vec<DMatrix<f64>> = (0..=grid.steps)
            .into_par_iter()
            .map(|m| sys.propagator(m as f64 * dt))
            .collect();
        let props_b = props.iter().map(|p| p * &b).collect();
        let shifted = DMatrix::identity(n, n) - sys.generator();
        let r1 = shifted.try_inverse().ok_or(Error::ResolventDomain { lambda: 1.0, growth_bound: sys.growth_bound() })?;
        let r1b = r1 * &b;
        let sup_prop = props.iter().map(op_norm).fold(0.0, f64::max) * (dt * op_norm(sys.generator())).exp();
        Ok(Self { sys, b, grid, props, props_b, r1b, sup_prop })
    }

    pub fn perturbation(&self) -> &DMatrix<f64> {
        &self.b
    }

    /// `sup_{r <= t0} ||exp(rA)||`, certified between nodes.
    pub fn propagator_bound(&self) -> f64 {
        self.sup_prop
    }

    /// `dt * sum'_{j <= n} kernel[n - j] * values[j]` (half weights at both ends).
    fn trapezoid(&self, kernel: &[DMatrix<f64>], values: &[DMatrix<f64>], n: usize) -> DMatrix<f64> {
        let dt = self.grid.dt();
        let (rows, cols) = values[0].shape();
        let mut acc = DMatrix::zeros(rows, cols);
        if n == 0 {
            return acc;
        }
        for j in 0..=n {
            let w = if j == 0 || j == n { 0.5 * dt } else { dt };
            acc.gemm(w, &kernel[n - j], &values[j], 1.0);
        }
        acc
    }
}

impl Coupling for MatrixCoupling {
    type Sys = MatrixSystem;
    type Term = Vec<DMatrix<f64>>;

    fn system(&self) -> &MatrixSystem {
        &self.sys
    }

    fn grid(&self) -> TimeGrid {
        self.grid
    }

    fn regrid(&self, t0: f64, steps: usize) -> Result<Self> {
        Self::new(self.sys.clone(), self.b.clone(), TimeGrid::new(t0, steps)?)
    }

    fn operator(&self) -> PerturbationOperator {
        PerturbationOperator::Matrix(self.b.clone())
    }

    /// `||B|| t0 sup_{r <= t0} ||exp(rA)||`.
    fn analytic_bound(&self) -> Option<f64> {
        Some(op_norm(&self.b) * self.grid.t0 * self.sup_prop)
    }

    fn continuity_constant(&self) -> Option<f64> {
        Some(op_norm(&self.b))
    }

    fn is_trivial(&self) -> bool {
        self.b.iter().all(|&v| v == 0.0)
    }

    fn dependence_window(&self, window: CompactInterval) -> CompactInterval {
        window
    }

    fn perturb(&self, x: &DMatrix<f64>) -> Result<ExtrapolatedElement<DMatrix<f64>>> {
        Ok(ExtrapolatedElement { regularized: &self.r1b * x })
    }

    fn base_term(&self, x: &DMatrix<f64>) -> Result<Self::Term> {
        if x.nrows() != self.sys.dim() {
            return Err(Error::InvalidInput(format!("state has {} rows, system dimension is {}", x.nrows(), self.sys.dim())));
        }
        Ok(self.props.par_iter().map(|p| p * x).collect())
    }

    fn next_term(&self, term: &Self::Term) -> Self::Term {
        (0..=self.grid.steps)
            .into_par_iter()
            .map(|n| self.trapezoid(&self.props_b, term, n))
            .collect()
    }

    fn term_norm(&self, term: &Self::Term) -> f64 {
        term.par_iter().map(op_norm).reduce(|| 0.0, f64::max)
    }

    fn term_value(&self, term: &Self::Term, node: usize) -> Result<DMatrix<f64>> {
        term.get(node)
            .cloned()
            .ok_or_else(|| Error::InvalidInput(format!("node {node} outside the time grid")))
    }

    /// Regularized route: `(1 - A) int T(t - r) R(1, A) B F(r) dr`.
    fn volterra(&self, traj: &VectorTrajectory<DMatrix<f64>>, node: usize) -> Result<DMatrix<f64>> {
        let reg = self.volterra_regularized(traj, node)?;
        reconstruct(&self.sys, &reg)
    }

    fn volterra_regularized(
        &self,
        traj: &VectorTrajectory<DMatrix<f64>>,
        node: usize,
    ) -> Result<ExtrapolatedElement<DMatrix<f64>>> {
        check_trajectory(self.grid, traj, node)?;
        let ranged: Vec<DMatrix<f64>> = traj.nodes[..=node].iter().map(|f| &self.r1b * f).collect();
        let u = self.trapezoid(&self.props, &ranged, node);
        Ok(ExtrapolatedElement { regularized: u })
    }

    fn perturbed_resolvent(&self, lambda: f64, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.sys.resolvent(lambda, &(&self.b * x))
    }
}
