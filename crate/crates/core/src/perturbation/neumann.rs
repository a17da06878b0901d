use super::{Coupling, State, VectorTrajectory};
use crate::error::{Error, Result};
use crate::semigroup::{LinearSpace, Semigroup};

/// Hard cap on the number of Neumann terms.
pub const MAX_TERMS: usize = 60;

/// Default relative truncation tolerance.
pub const DEFAULT_TOL: f64 = 1e-12;

/// Terms `(V^k T)(.) x` on `[0, t0]` and their node-sup norms (or certified bounds).
#[derive(Debug, Clone)]
pub struct NeumannSeries<T> {
    pub terms: Vec<T>,
    pub norms: Vec<f64>,
}

impl<T> NeumannSeries<T> {
    /// Ratios of consecutive term norms.
    pub fn ratios(&self) -> Vec<f64> {
        self.norms
            .windows(2)
            .map(|w| if w[0] > 0.0 { w[1] / w[0] } else { 0.0 })
            .collect()
    }
}

/// Refuse to build the series unless `||V_B|| < 1` is certified.
pub fn guard<C: Coupling>(c: &C) -> Result<f64> {
    let bound = c.analytic_bound().unwrap_or(f64::INFINITY);
    if !(bound < 1.0) {
        return Err(Error::GuardViolation { bound, limit: 1.0 });
    }
    Ok(bound)
}

/// Sum `V^k T x` until a term drops below `tol ||x|| (1 - q)`, `q` the observed ratio.
pub fn neumann_run<C: Coupling>(c: &C, x: &State<C>, tol: f64) -> Result<NeumannSeries<C::Term>> {
    let base = c.base_term(x)?;
    let scale = x.full_norm();
    let mut norms = vec![c.term_norm(&base)];
    let mut terms = vec![base];
    if scale == 0.0 || c.is_trivial() {
        return Ok(NeumannSeries { terms, norms });
    }
    let mut streak = 0;
    loop {
        let next = c.next_term(terms.last().expect("nonempty"));
        let norm = c.term_norm(&next);
        let prev = *norms.last().expect("nonempty");
        terms.push(next);
        norms.push(norm);
        if norm == 0.0 {
            break;
        }
        let q = if prev > 0.0 { norm / prev } else { f64::INFINITY };
        if q >= 1.0 {
            streak += 1;
            if streak >= 3 {
                return Err(Error::NonConvergence { terms: terms.len(), consecutive: streak });
            }
        } else {
            streak = 0;
            if norm < tol * scale * (1.0 - q) {
                break;
            }
        }
        if terms.len() >= MAX_TERMS {
            return Err(Error::NonConvergence { terms: terms.len(), consecutive: streak });
        }
    }
    Ok(NeumannSeries { terms, norms })
}

/// `S(t) x`: write `t = n t0 + t1` and apply `S(t0)^n S(t1)` right to left.
pub fn neumann_semigroup<C: Coupling>(c: &C, t: f64, x: &State<C>, tol: f64) -> Result<State<C>> {
    if !(t >= 0.0) {
        return Err(Error::InvalidInput(format!("time must be nonnegative, got {t}")));
    }
    let horizon = c.system().horizon();
    if t > horizon * (1.0 + 1e-12) {
        return Err(Error::HorizonExceeded { t, horizon });
    }
    if c.is_trivial() {
        return c.system().apply(t, x);
    }
    guard(c)?;
    let grid = c.grid();
    let mut n = (t / grid.t0 + 1e-9).floor() as usize;
    let mut t1 = t - n as f64 * grid.t0;
    if t1 < 0.0 {
        t1 = 0.0;
    }
    let mut i1 = grid.node_of(t1)?;
    if i1 == grid.steps && n > 0 {
        // t1 rounded up to t0
        i1 = 0;
        n += 1;
    }
    let mut y = if i1 == 0 {
        x.clone()
    } else {
        let run = neumann_run(c, x, tol)?;
        c.series_value(&run.terms, i1)?
    };
    for _ in 0..n {
        let run = neumann_run(c, &y, tol)?;
        y = c.series_value(&run.terms, grid.steps)?;
    }
    Ok(y)
}

/// `S(t_i) x` at every node of the coupling's grid.
pub fn neumann_trajectory<C: Coupling>(c: &C, x: &State<C>, tol: f64) -> Result<VectorTrajectory<State<C>>> {
    if !c.is_trivial() {
        guard(c)?;
    }
    let run = neumann_run(c, x, tol)?;
    let grid = c.grid();
    let nodes = (0..=grid.steps)
        .map(|i| c.series_value(&run.terms, i))
        .collect::<Result<Vec<_>>>()?;
    Ok(VectorTrajectory { dt: grid.dt(), nodes })
}
