use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::neumann::{neumann_run, neumann_semigroup};
use super::{Coupling, State, VectorTrajectory};
use crate::error::{Error, Result};
use crate::functions::CompactInterval;
use crate::semigroup::{embed_aminus1, reconstruct, LinearSpace, Semigroup};

/// `(V_B F)(t_node)`, reconstructed into `X`.
pub fn volterra_apply<C: Coupling>(c: &C, traj: &VectorTrajectory<State<C>>, node: usize) -> Result<State<C>> {
    c.volterra(traj, node)
}

/// `(V_B F)(t_node)` through regularized coordinates, then the membership test.
pub fn volterra_apply_regularized<C: Coupling>(
    c: &C,
    traj: &VectorTrajectory<State<C>>,
    node: usize,
) -> Result<State<C>> {
    let reg = c.volterra_regularized(traj, node)?;
    reconstruct(c.system(), &reg)
}

fn trajectory_norm<C: Coupling>(traj: &VectorTrajectory<State<C>>) -> f64 {
    traj.nodes.iter().map(LinearSpace::full_norm).fold(0.0, f64::max)
}

fn sampled_nodes(steps: usize) -> Vec<usize> {
    let stride = (steps / 50).max(1);
    let mut nodes: Vec<usize> = (1..=steps).step_by(stride).collect();
    if nodes.last() != Some(&steps) {
        nodes.push(steps);
    }
    nodes
}

/// Empirical lower bound on `||V_B||`: `max ||(V_B F)(t)|| / ||F||` over probes and sampled nodes.
pub fn volterra_norm_estimate<C: Coupling>(c: &C, probes: &[VectorTrajectory<State<C>>]) -> Result<f64> {
    if c.is_trivial() {
        return Ok(0.0);
    }
    let mut best: f64 = 0.0;
    for traj in probes {
        let scale = trajectory_norm::<C>(traj);
        if scale == 0.0 {
            continue;
        }
        for node in sampled_nodes(traj.nodes.len() - 1) {
            best = best.max(c.volterra(traj, node)?.full_norm() / scale);
        }
    }
    Ok(best)
}

/// The first `upto + 1` Neumann terms of `x`, without truncation.
fn power_terms<C: Coupling>(c: &C, x: &State<C>, upto: usize) -> Result<Vec<C::Term>> {
    let mut terms = vec![c.base_term(x)?];
    for _ in 0..upto {
        let next = c.next_term(terms.last().expect("nonempty"));
        terms.push(next);
    }
    Ok(terms)
}

/// `|| (V^n T)(t + s) x - sum_k (V^{n-k} T)(s) (V^k T)(t) x ||`.
///
/// Each of the three integration ranges `[0, t + s]`, `[0, t]`, `[0, s]` gets its
/// own uniform grid with `steps` intervals, so the residual measures genuine
/// quadrature error rather than cancelling on a shared grid. For `n = 0`
/// the residual is the semigroup law `T(t + s) x - T(s) T(t) x`.
pub fn identity_check<C: Coupling>(c: &C, n: usize, s: f64, t: f64, x: &State<C>, steps: usize) -> Result<f64> {
    if !(s > 0.0 && t > 0.0) {
        return Err(Error::InvalidInput(format!("identity check needs s, t > 0, got s = {s}, t = {t}")));
    }
    let sys = c.system();
    if n == 0 {
        let mut lhs = sys.apply(t + s, x)?;
        lhs.axpy(-1.0, &sys.apply(s, &sys.apply(t, x)?)?);
        return Ok(sys.norm(&lhs));
    }
    let whole = c.regrid(t + s, steps)?;
    let mut lhs = whole.term_value(&power_terms(&whole, x, n)?[n], steps)?;

    let first = c.regrid(t, steps)?;
    let second = c.regrid(s, steps)?;
    let inner = power_terms(&first, x, n)?;
    for (k, term) in inner.iter().enumerate() {
        let y = first.term_value(term, steps)?;
        let outer = power_terms(&second, &y, n - k)?;
        lhs.axpy(-1.0, &second.term_value(&outer[n - k], steps)?);
    }
    Ok(sys.norm(&lhs))
}

/// `|| S(t) x - T(t) x - int_0^t T_{-1}(t - r) B S(r) x dr ||` for a candidate `S`.
pub fn varpar_residual<C, F>(c: &C, s_fn: F, t: f64, x: &State<C>) -> Result<f64>
where
    C: Coupling,
    F: Fn(f64) -> Result<State<C>> + Sync,
{
    let grid = c.grid();
    let node = grid.node_of(t)?;
    let nodes = (0..=node).into_par_iter().map(|i| s_fn(grid.time(i))).collect::<Result<Vec<_>>>()?;
    let traj = VectorTrajectory { dt: grid.dt(), nodes };
    let integral = c.volterra(&traj, node)?;
    let mut r = traj.nodes[node].clone();
    r.axpy(-1.0, &c.system().apply(t, x)?);
    r.axpy(-1.0, &integral);
    Ok(c.system().norm(&r))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionA {
    pub pass: bool,
    /// Probes whose integral failed the membership test.
    pub failures: usize,
    /// Worst relative gap between the regularized and pointwise Volterra routes.
    pub worst_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionB {
    /// Smallest `K` with `p_K(int ...) <= K sup_r p_{K'}(f(r)) + eps ||f||` on the probes.
    pub k: f64,
    pub window: CompactInterval,
    pub dependence_window: CompactInterval,
    pub eps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionC {
    /// `max(observed, analytic)`.
    pub m: f64,
    pub observed: f64,
    pub analytic: Option<f64>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub cond_a: ConditionA,
    pub cond_b: ConditionB,
    pub cond_c: ConditionC,
    pub volterra_norm_lower_bound: f64,
}

impl AdmissibilityReport {
    pub fn pass(&self) -> bool {
        self.cond_a.pass && self.cond_c.pass && self.cond_b.k.is_finite()
    }
}

/// Probe the three admissibility conditions on `int_0^{t0} T_{-1}(t0 - r) B f(r) dr`.
///
/// (a) the integral lies in `X`, (b) its seminorms are controlled by seminorms
/// of `f` on the dependence window, (c) its norm is at most `M ||f||` with `M < 1/2`.
pub fn admissibility_check<C: Coupling>(
    c: &C,
    probes: &[VectorTrajectory<State<C>>],
    eps: f64,
    window: CompactInterval,
) -> Result<AdmissibilityReport> {
    let sys = c.system();
    let steps = c.grid().steps;
    let dep = c.dependence_window(window);
    let mut failures = 0;
    let mut worst_residual: f64 = 0.0;
    let mut k_fit: f64 = 0.0;
    let mut observed: f64 = 0.0;
    for traj in probes {
        let scale = trajectory_norm::<C>(traj);
        if scale == 0.0 {
            continue;
        }
        let fast = c.volterra(traj, steps)?;
        match c.volterra_regularized(traj, steps).and_then(|reg| reconstruct(sys, &reg)) {
            Ok(slow) => {
                let mut d = slow;
                d.axpy(-1.0, &fast);
                worst_residual = worst_residual.max(sys.norm(&d) / scale);
            }
            Err(Error::NotInX { .. }) | Err(Error::MissingRegularization) => failures += 1,
            Err(e) => return Err(e),
        }
        observed = observed.max(fast.full_norm() / scale);
        let lhs = sys.seminorm(&fast, window) - eps * scale;
        if lhs > 0.0 {
            let rhs = traj.nodes.iter().map(|f| sys.seminorm(f, dep)).fold(0.0, f64::max);
            k_fit = k_fit.max(if rhs > 0.0 { lhs / rhs } else { f64::INFINITY });
        }
    }
    let analytic = c.analytic_bound();
    let m = observed.max(analytic.unwrap_or(0.0));
    let lower = volterra_norm_estimate(c, probes)?;
    Ok(AdmissibilityReport {
        cond_a: ConditionA { pass: failures == 0, failures, worst_residual },
        cond_b: ConditionB { k: k_fit, window, dependence_window: dep, eps },
        cond_c: ConditionC { m, observed, analytic, pass: m < 0.5 },
        volterra_norm_lower_bound: lower,
    })
}

/// `(lhs, rhs)` for `||R(lambda, A_{-1}) B|| <= ||V_B|| + M q / (1 - q) ||V_B||`, `q = e^{(omega - lambda) t0}`.
///
/// `lhs` is measured on unit-normalized probes; `||V_B||` is the larger of the
/// analytic bound and `v_estimate`.
pub fn perturbed_resolvent_check<C: Coupling>(
    c: &C,
    lambda: f64,
    probes: &[State<C>],
    v_estimate: Option<f64>,
) -> Result<(f64, f64)> {
    let sys = c.system();
    let omega = sys.growth_bound();
    if !(lambda > omega) {
        return Err(Error::ResolventDomain { lambda, growth_bound: omega });
    }
    if c.is_trivial() {
        return Ok((0.0, 0.0));
    }
    let mut lhs: f64 = 0.0;
    for x in probes {
        let scale = x.full_norm();
        if scale > 0.0 {
            lhs = lhs.max(c.perturbed_resolvent(lambda, x)?.full_norm() / scale);
        }
    }
    let v = c.analytic_bound().unwrap_or(0.0).max(v_estimate.unwrap_or(0.0));
    let q = ((omega - lambda) * c.grid().t0).exp();
    let rhs = v + sys.bound_constant() * q / (1.0 - q) * v;
    Ok((lhs, rhs))
}

/// `||(S(h) f - f) / h - C f||` for each `h`, with `C f = (A_{-1} + B) f` reconstructed in `X`.
///
/// Fails with `NotInX` when `A_{-1} f + B f` is not in `X`, i.e. `f` is outside the domain.
pub fn generator_check<C: Coupling>(c: &C, f: &State<C>, h_steps: &[f64], tol: f64) -> Result<Vec<(f64, f64)>> {
    let sys = c.system();
    let candidate = embed_aminus1(sys, f)?.add(&c.perturb(f)?);
    let cf = reconstruct(sys, &candidate)?;
    h_steps
        .iter()
        .map(|&h| {
            let mut q = neumann_semigroup(c, h, f, tol)?;
            q.axpy(-1.0, f);
            let mut r = q.scaled(1.0 / h);
            r.axpy(-1.0, &cf);
            Ok((h, sys.norm(&r)))
        })
        .collect()
}

/// `max_s ||T(s) x - x|| / s^alpha` over the samples.
pub fn favard_seminorm<Y: Semigroup>(sys: &Y, x: &Y::State, alpha: f64, s_samples: &[f64]) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidInput(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    let mut best: f64 = 0.0;
    for &s in s_samples {
        let mut d = sys.apply(s, x)?;
        d.axpy(-1.0, x);
        best = best.max(sys.norm(&d) / s.powf(alpha));
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonResult {
    /// `(t, max_x ||T(t) x - S(t) x|| / (t ||x||))`.
    pub per_t: Vec<(f64, f64)>,
    pub c_est: f64,
}

impl ComparisonResult {
    /// Largest over smallest per-sample ratio.
    pub fn spread(&self) -> f64 {
        let lo = self.per_t.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        let hi = self.per_t.iter().map(|p| p.1).fold(0.0, f64::max);
        if hi == 0.0 {
            1.0
        } else {
            hi / lo
        }
    }
}

/// `C_est = max ||T(t) x - S(t) x|| / t` over `t_samples` and unit-normalized probes.
pub fn comparison_check<C: Coupling>(c: &C, t_samples: &[f64], probes: &[State<C>], tol: f64) -> Result<ComparisonResult> {
    let sys = c.system();
    let mut per_t = Vec::with_capacity(t_samples.len());
    for &t in t_samples {
        let mut best: f64 = 0.0;
        for x in probes {
            let scale = sys.norm(x).max(x.full_norm());
            if scale == 0.0 {
                continue;
            }
            let mut d = sys.apply(t, x)?;
            d.axpy(-1.0, &neumann_semigroup(c, t, x, tol)?);
            best = best.max(sys.norm(&d) / (t * scale));
        }
        per_t.push((t, best));
    }
    let c_est = per_t.iter().map(|p| p.1).fold(0.0, f64::max);
    Ok(ComparisonResult { per_t, c_est })
}

/// Neumann term ratios for `x`, for inspection.
pub fn term_ratios<C: Coupling>(c: &C, x: &State<C>, tol: f64) -> Result<Vec<f64>> {
    Ok(neumann_run(c, x, tol)?.ratios())
}
