//! Rank-one perturbations `B f = Phi(f) g` of left translation on bounded continuous functions.
//!
//! `g` is piecewise polynomial with finitely many jump discontinuities. When
//! `g = h - h'` for a bounded regular `h`, `g` lies in the extrapolation space
//! and the perturbed generator is `C f = f' + Phi(f) g` on the functions whose
//! derivative jumps compensate the jumps of `g`.

mod oracle;

use serde::{Deserialize, Serialize};

pub use oracle::{oracle_solve, OracleSolution};

use crate::error::{Error, Result};
use crate::functions::{BoundedMeasure, GridFunction, Jump, PiecewiseFunction, Side};
use crate::perturbation::{neumann_semigroup, PerturbationOperator, RankOneCoupling, TimeGrid};
use crate::semigroup::TranslationSystem;

/// Jump gaps `b_n - a_n` of the canonical `g` at `-1, 0, 1`.
pub const CANONICAL_GAPS: [f64; 3] = [-1.0, 2.0, -1.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportProblem {
    pub measure: BoundedMeasure,
    pub g: PiecewiseFunction,
    /// `h` with `g = h - h'` away from the jumps of `g`.
    pub h_reg: Option<PiecewiseFunction>,
    pub u0: PiecewiseFunction,
    /// `(x_n, a_n, b_n)`: location and one-sided limits of `g`.
    pub jump_set: Vec<Jump>,
}

impl TransportProblem {
    pub fn new(
        measure: BoundedMeasure,
        g: PiecewiseFunction,
        h_reg: Option<PiecewiseFunction>,
        u0: PiecewiseFunction,
    ) -> Result<Self> {
        if g.support_hull().is_none() {
            return Err(Error::InvalidInput("g must have compact support".into()));
        }
        if let Some(h) = &h_reg {
            let residual = g.sub(&h.sub(&h.derivative())).sup_norm();
            if residual > 1e-12 * (1.0 + g.sup_norm()) {
                return Err(Error::InvalidInput(format!("h_reg does not satisfy g = h - h' (residual {residual:.3e})")));
            }
        }
        let jump_set = g.jumps();
        Ok(Self { measure, g, h_reg, u0, jump_set })
    }

    /// `g = h - h'` for the tent `h`, with initial datum `h`.
    pub fn canonical(measure: BoundedMeasure) -> Self {
        let h = PiecewiseFunction::tent();
        let prob = Self::new(measure, PiecewiseFunction::canonical_g(), Some(h.clone()), h)
            .expect("canonical problem is well formed");
        assert_eq!(prob.gaps(), CANONICAL_GAPS, "canonical jump gaps");
        prob
    }

    /// Truncated sawtooth `g` with a jump at every integer in `[lo, hi]`, initial datum the tent.
    pub fn sawtooth(measure: BoundedMeasure, lo: i32, hi: i32) -> Result<Self> {
        Self::new(measure, PiecewiseFunction::sawtooth(lo, hi)?, None, PiecewiseFunction::tent())
    }

    pub fn with_u0(mut self, u0: PiecewiseFunction) -> Self {
        self.u0 = u0;
        self
    }

    /// `b_n - a_n` recomputed from the one-sided limits of `g`.
    pub fn gaps(&self) -> Vec<f64> {
        self.jump_set.iter().map(|j| self.g.right_limit(j.x) - self.g.left_limit(j.x)).collect()
    }

    /// `Phi(f) = int f dmu`.
    pub fn phi(&self, f: &PiecewiseFunction) -> f64 {
        self.measure.pair(f)
    }

    /// `2 |mu|(R) t0` for `||g|| <= 2`; in general `||g|| |mu|(R) t0`.
    pub fn volterra_bound(&self, t0: f64) -> f64 {
        self.g.sup_norm() * self.measure.total_variation() * t0
    }

    pub fn coupling(&self, sys: TranslationSystem, grid: TimeGrid) -> Result<RankOneCoupling> {
        RankOneCoupling::new(sys, self.measure.clone(), self.g.clone(), self.h_reg.clone(), grid)
    }
}

/// Choice of `g` in a problem file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GSelection {
    Canonical,
    TruncatedSawtooth { lo: i32, hi: i32 },
    Piecewise { g: PiecewiseFunction, h_reg: Option<PiecewiseFunction> },
}

/// Problem as read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemConfig {
    pub measure: BoundedMeasure,
    pub g: GSelection,
    #[serde(default)]
    pub u0: Option<PiecewiseFunction>,
}

impl ProblemConfig {
    pub fn build(&self) -> Result<TransportProblem> {
        let prob = match &self.g {
            GSelection::Canonical => TransportProblem::canonical(self.measure.clone()),
            GSelection::TruncatedSawtooth { lo, hi } => TransportProblem::sawtooth(self.measure.clone(), *lo, *hi)?,
            GSelection::Piecewise { g, h_reg } => {
                TransportProblem::new(self.measure.clone(), g.clone(), h_reg.clone(), PiecewiseFunction::tent())?
            }
        };
        Ok(match &self.u0 {
            Some(u0) => prob.with_u0(u0.clone()),
            None => prob,
        })
    }
}

/// `kappa(s) = int g(x + s) dmu(x)`, exact.
pub fn kernel(measure: &BoundedMeasure, g: &PiecewiseFunction, s: f64) -> f64 {
    let atoms: f64 = measure.atoms().iter().map(|a| a.weight * g.eval(a.location + s)).sum();
    atoms + measure.density().map_or(0.0, |d| d.mul(&g.shift(s)).integral())
}

pub fn build_rank_one(prob: &TransportProblem) -> Result<PerturbationOperator> {
    let h_reg = prob.h_reg.clone().ok_or(Error::MissingRegularization)?;
    Ok(PerturbationOperator::RankOne { measure: prob.measure.clone(), g: prob.g.clone(), h_reg: Some(h_reg) })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpResidual {
    pub x: f64,
    /// `[f'(x-) - f'(x+)] - Phi(f) (b - a)`.
    pub residual: f64,
}

/// Jump-condition residuals of `f` at every jump of `g` and every kink of `f`.
///
/// Away from the jumps of `g` the condition reads `f'(x-) = f'(x+)`.
pub fn domain_check(f: &PiecewiseFunction, prob: &TransportProblem) -> Vec<JumpResidual> {
    let phi = prob.phi(f);
    let mut points: Vec<f64> = prob.jump_set.iter().map(|j| j.x).chain(f.breakpoints().iter().copied()).collect();
    points.sort_by(f64::total_cmp);
    points.dedup();
    points
        .into_iter()
        .map(|x| {
            let gap = prob.g.right_limit(x) - prob.g.left_limit(x);
            let kink = f.one_sided_derivative(x, Side::Left) - f.one_sided_derivative(x, Side::Right);
            JumpResidual { x, residual: kink - phi * gap }
        })
        .collect()
}

/// `f` continuous with every jump residual exactly zero.
pub fn in_domain(f: &PiecewiseFunction, prob: &TransportProblem) -> bool {
    f.jumps().is_empty() && domain_check(f, prob).iter().all(|r| r.residual == 0.0)
}

/// `C f = f' + Phi(f) g`, where it is defined.
pub fn generator_image(f: &PiecewiseFunction, prob: &TransportProblem) -> PiecewiseFunction {
    f.derivative().add(&prob.g.scale(prob.phi(f)))
}

/// `sum_n (b_n - a_n) psi(x - x_n)` with `psi(y) = eps/4 (1 - |y|/eps)^2` on `|y| <= eps`.
///
/// `psi` is C^1 except for a unit derivative drop at 0, so the result has
/// derivative jumps exactly `b_n - a_n` at the `x_n`.
pub fn corner_profile(prob: &TransportProblem, eps: f64) -> Result<PiecewiseFunction> {
    if !(eps > 0.0) {
        return Err(Error::InvalidInput(format!("corner width must be positive, got {eps}")));
    }
    let mut w = PiecewiseFunction::zero();
    for (jump, gap) in prob.jump_set.iter().zip(prob.gaps()) {
        let x0 = jump.x;
        // eps/4 (1 + (x - x0)/eps)^2 on the left, eps/4 (1 - (x - x0)/eps)^2 on the right
        let left = [eps / 4.0, 0.5, 0.25 / eps];
        let right = [eps / 4.0, -0.5, 0.25 / eps];
        let psi = PiecewiseFunction::new(
            vec![-eps, 0.0, eps],
            vec![vec![0.0], left.to_vec(), right.to_vec(), vec![0.0]],
        )?
        .shift(-x0);
        w = w.add(&psi.scale(gap));
    }
    Ok(w)
}

/// `f = f0 + s w` with `s = Phi(f0) / (1 - Phi(w))`, which satisfies every jump condition.
pub fn build_domain_function(
    prob: &TransportProblem,
    f0: &PiecewiseFunction,
    w: &PiecewiseFunction,
) -> Result<PiecewiseFunction> {
    let tol = 1e-12 * (1.0 + prob.g.sup_norm());
    if let Some(r) = domain_check(f0, &TransportProblem { measure: BoundedMeasure::zero(), ..prob.clone() })
        .iter()
        .find(|r| r.residual.abs() > tol)
    {
        return Err(Error::Precondition(format!("f0 has a derivative jump at x = {}", r.x)));
    }
    for (jump, gap) in prob.jump_set.iter().zip(prob.gaps()) {
        let kink = w.one_sided_derivative(jump.x, Side::Left) - w.one_sided_derivative(jump.x, Side::Right);
        if (kink - gap).abs() > tol {
            return Err(Error::Precondition(format!("w has derivative jump {kink} at x = {}, expected {gap}", jump.x)));
        }
    }
    if !f0.jumps().is_empty() || !w.jumps().is_empty() {
        return Err(Error::Precondition("f0 and w must be continuous".into()));
    }
    let phi_w = prob.phi(w);
    if (1.0 - phi_w).abs() <= 1e-12 {
        return Err(Error::Degenerate { phi_w });
    }
    let s = prob.phi(f0) / (1.0 - phi_w);
    Ok(f0.add(&w.scale(s)))
}

/// `S(t) u0` on the system grid by the Neumann series with the rank-one fast path.
pub fn run_perturbed(
    prob: &TransportProblem,
    sys: &TranslationSystem,
    grid: TimeGrid,
    t: f64,
    tol: f64,
) -> Result<GridFunction> {
    let c = prob.coupling(sys.clone(), grid)?;
    neumann_semigroup(&c, t, &sys.sample(&prob.u0), tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functions::CompactInterval;

    #[test]
    fn kernel_examples() {
        let g = PiecewiseFunction::canonical_g();
        assert_eq!(kernel(&BoundedMeasure::dirac(0.0), &g, 0.5), 1.5);
        assert_eq!(kernel(&BoundedMeasure::dirac(0.0), &g, -0.25), g.eval(-0.25));
        assert_eq!(kernel(&BoundedMeasure::zero(), &g, 0.5), 0.0);
    }

    #[test]
    fn canonical_gaps_from_limits() {
        let prob = TransportProblem::canonical(BoundedMeasure::dirac(0.0));
        let xs: Vec<f64> = prob.jump_set.iter().map(|j| j.x).collect();
        assert_eq!(xs, vec![-1.0, 0.0, 1.0]);
        let limits: Vec<(f64, f64)> = prob.jump_set.iter().map(|j| (j.left, j.right)).collect();
        assert_eq!(limits, vec![(0.0, -1.0), (0.0, 2.0), (1.0, 0.0)]);
    }

    #[test]
    fn tent_is_in_the_domain_for_unit_dirac_only() {
        let h = PiecewiseFunction::tent();
        let prob = TransportProblem::canonical(BoundedMeasure::dirac(0.0));
        assert!(in_domain(&h, &prob));
        let half = TransportProblem::canonical(BoundedMeasure::atomic(&[(0.0, 0.5)]));
        let r = domain_check(&h, &half);
        assert_eq!(r.iter().map(|r| r.residual).collect::<Vec<_>>(), vec![-0.5, 1.0, -0.5]);
    }

    #[test]
    fn smooth_function_with_zero_phi() {
        let prob = TransportProblem::canonical(BoundedMeasure::dirac(3.0));
        let bump = PiecewiseFunction::new(vec![-2.0, 2.0], vec![vec![0.0], vec![1.0, 0.0, -0.5, 0.0, 0.0625], vec![0.0]]).unwrap();
        assert!(domain_check(&bump, &prob).iter().all(|r| r.residual == 0.0));
    }

    #[test]
    fn corner_profile_has_the_gap_kinks() {
        let prob = TransportProblem::canonical(BoundedMeasure::dirac(0.0));
        let w = corner_profile(&prob, 1.0).unwrap();
        assert_eq!(w.eval(0.0), 0.5);
        let f0 = PiecewiseFunction::zero();
        let bare = TransportProblem { measure: BoundedMeasure::zero(), ..prob.clone() };
        let kinks: Vec<f64> = domain_check(&w, &bare).iter().map(|r| r.residual).collect();
        assert_eq!(kinks.iter().filter(|&&k| k != 0.0).count(), 3);
        assert_eq!(build_domain_function(&prob, &f0, &w).unwrap(), f0.add(&w.scale(0.0)));
    }

    #[test]
    fn degenerate_profile_is_signalled() {
        let prob = TransportProblem::canonical(BoundedMeasure::atomic(&[(0.0, 2.0)]));
        let w = corner_profile(&prob, 1.0).unwrap();
        let f0 = PiecewiseFunction::zero();
        assert_eq!(prob.phi(&w), 1.0);
        assert!(matches!(build_domain_function(&prob, &f0, &w), Err(Error::Degenerate { .. })));
    }

    #[test]
    fn oracle_trivial_cases() {
        let prob = TransportProblem::canonical(BoundedMeasure::zero());
        let sol = oracle_solve(&prob, 0.5, 0.01).unwrap();
        assert!(sol.phi.iter().all(|&p| p == 0.0));
        assert_eq!(sol.eval(-0.3), PiecewiseFunction::tent().eval(0.2));

        let prob = TransportProblem::canonical(BoundedMeasure::dirac(0.0)).with_u0(PiecewiseFunction::zero());
        let sol = oracle_solve(&prob, 0.5, 0.01).unwrap();
        assert!(sol.phi.iter().all(|&p| p == 0.0));
        assert_eq!(sol.eval(0.1), 0.0);
    }

    #[test]
    fn oracle_self_convergence_is_second_order() {
        let prob = TransportProblem::canonical(BoundedMeasure::dirac(0.0));
        let at = |dt: f64| oracle_solve(&prob, 0.5, dt).unwrap();
        assert_eq!(at(0.01).phi[0], 1.0);
        let xs = [-0.7, -0.2, 0.1, 0.45];
        let fine = at(0.5 / 1600.0);
        let err = |s: &OracleSolution| xs.iter().map(|&x| (s.eval(x) - fine.eval(x)).abs()).fold(0.0, f64::max);
        let (e1, e2, e3) = (err(&at(0.5 / 50.0)), err(&at(0.5 / 100.0)), err(&at(0.5 / 200.0)));
        assert!(e1 / e2 > 3.0 && e2 / e3 > 3.0, "{e1} {e2} {e3}");
    }

    #[test]
    fn oracle_rejects_huge_steps() {
        let prob = TransportProblem::canonical(BoundedMeasure::atomic(&[(0.5, 40.0)]));
        assert!(matches!(oracle_solve(&prob, 1.0, 0.5), Err(Error::StepSize { .. })));
    }

    #[test]
    fn engine_matches_oracle() {
        let prob = TransportProblem::canonical(BoundedMeasure::atomic(&[(0.0, 1.0), (0.3, 0.5)]));
        let window = CompactInterval::new(-2.0, 2.0).unwrap();
        let dt = 0.01;
        let sys = TranslationSystem::covering(-3.0, 4.0, dt, 1.0, window).unwrap();
        let u = run_perturbed(&prob, &sys, TimeGrid::with_step(0.2, dt).unwrap(), 1.0, 1e-12).unwrap();
        let sol = oracle_solve(&prob, 1.0, dt).unwrap();
        assert!(sol.window_distance(&sys, &u, 100) < 1e-10);
    }

    #[test]
    fn zero_measure_is_pure_translation() {
        let prob = TransportProblem::canonical(BoundedMeasure::zero());
        let window = CompactInterval::new(-2.0, 2.0).unwrap();
        let sys = TranslationSystem::covering(-3.0, 4.0, 0.01, 1.0, window).unwrap();
        let u = run_perturbed(&prob, &sys, TimeGrid::with_step(0.2, 0.01).unwrap(), 0.7, 1e-12).unwrap();
        assert_eq!(u, sys.sample(&prob.u0).shifted(70));
    }
}
