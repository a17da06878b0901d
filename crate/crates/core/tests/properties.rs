mod common;

use nalgebra::DMatrix;
use proptest::prelude::*;
use semiperturb::functions::{BoundedMeasure, CompactInterval, PiecewiseFunction};
use semiperturb::implemented::{extract_perturbation, implement_left, lift_perturbation, SuperOperator};
use semiperturb::perturbation::{
    generator_check, neumann_semigroup, volterra_apply, Coupling, MatrixCoupling, TimeGrid, VectorTrajectory, DEFAULT_TOL,
};
use semiperturb::report::Report;
use semiperturb::semigroup::{embed_aminus1, lift, log_norm, LinearSpace, op_norm, reconstruct, MatrixSystem, Semigroup, TranslationSystem};
use semiperturb::transport::{domain_check, in_domain, TransportProblem};
use semiperturb::Error;

use common::{random_pair, taylor_expm};

fn config() -> ProptestConfig {
    ProptestConfig { cases: 24, ..ProptestConfig::default() }
}

fn matrix(n: usize) -> impl Strategy<Value = DMatrix<f64>> {
    proptest::collection::vec(-1.0..1.0f64, n * n).prop_map(move |v| DMatrix::from_vec(n, n, v))
}

fn int_matrix(n: usize) -> impl Strategy<Value = DMatrix<f64>> {
    proptest::collection::vec(-9i32..=9, n * n).prop_map(move |v| DMatrix::from_iterator(n, n, v.into_iter().map(f64::from)))
}

/// Piecewise polynomial on `[-2, 2]` with four random cubic pieces and constant tails.
fn piecewise() -> impl Strategy<Value = PiecewiseFunction> {
    (proptest::collection::vec(-1.0..1.0f64, 16), -1.0..1.0f64, -1.0..1.0f64).prop_map(|(c, l, r)| {
        let mut pieces = vec![vec![l]];
        pieces.extend(c.chunks(4).map(|w| w.to_vec()));
        pieces.push(vec![r]);
        PiecewiseFunction::new(vec![-2.0, -1.0, 0.0, 1.0, 2.0], pieces).unwrap()
    })
}

fn measure() -> impl Strategy<Value = BoundedMeasure> {
    proptest::collection::vec((-1.5..1.5f64, -1.0..1.0f64), 1..4).prop_map(|a| BoundedMeasure::atomic(&a))
}

/// Random generator shifted so its logarithmic norm is `-0.1`; every `lambda > 0` is then admissible.
fn dissipative(seed: u64) -> DMatrix<f64> {
    let (a, _) = random_pair(seed, 3, 0.2, 1.0);
    let shift = log_norm(&a) + 0.1;
    a - DMatrix::identity(3, 3) * shift
}

fn translation() -> TranslationSystem {
    TranslationSystem::covering(-4.0, 4.0, 1e-2, 1.0, CompactInterval::new(-2.0, 2.0).unwrap()).unwrap()
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn seminorm_is_dominated_by_sup(f in piecewise(), lo in -3.0..3.0f64, w in 0.0..3.0f64) {
        let k = CompactInterval::new(lo, lo + w).unwrap();
        prop_assert!(f.seminorm(k) <= f.sup_norm() + 1e-15);
        prop_assert!(f.seminorm(CompactInterval::new(-3.0, 3.0).unwrap()) >= f.sup_norm() - 1e-12);
    }

    #[test]
    fn pairing_is_linear_and_bounded(mu in measure(), f in piecewise(), g in piecewise(), a in -2.0..2.0f64, b in -2.0..2.0f64) {
        let combo = f.scale(a).add(&g.scale(b));
        let lhs = mu.pair(&combo) - a * mu.pair(&f) - b * mu.pair(&g);
        let scale = (a.abs() * f.sup_norm() + b.abs() * g.sup_norm()) * mu.total_variation();
        prop_assert!(lhs.abs() <= 1e-12 * scale.max(1.0));
        prop_assert!(mu.pair(&f).abs() <= mu.total_variation() * f.sup_norm() + 1e-14);
        let one = PiecewiseFunction::constant(1.0);
        prop_assert!((mu.pair(&one) - mu.total_mass()).abs() <= 1e-14);
    }

    #[test]
    fn canonical_g_is_h_minus_h_prime(x in -3.0..3.0f64) {
        let prob = TransportProblem::canonical(BoundedMeasure::dirac(0.0));
        let h = prob.h_reg.clone().unwrap();
        prop_assume!([-1.0, 0.0, 1.0].iter().all(|b: &f64| (x - b).abs() > 1e-9));
        prop_assert_eq!(prob.g.eval(x), h.sub(&h.derivative()).eval(x));
    }

    #[test]
    fn matrix_semigroup_law(a in matrix(3), s in 0.0..1.5f64, t in 0.0..1.5f64) {
        let sys = MatrixSystem::new(a).unwrap();
        let x = DMatrix::identity(3, 3);
        let lhs = sys.apply(s, &sys.apply(t, &x).unwrap()).unwrap();
        let rhs = sys.apply(s + t, &x).unwrap();
        prop_assert!(op_norm(&(lhs - &rhs)) <= 1e-12 * (1.0 + op_norm(&rhs)));
    }

    #[test]
    fn translation_semigroup_law_is_exact(f in piecewise(), s in 0usize..50, t in 0usize..50) {
        let sys = translation();
        let x = sys.sample(&f);
        let (s, t) = (s as f64 * sys.spacing, t as f64 * sys.spacing);
        let lhs = sys.apply(s, &sys.apply(t, &x).unwrap()).unwrap();
        let rhs = sys.apply(s + t, &x).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn resolvent_identity(seed in 0u64..1000, lambda in 0.5..4.0f64, mu in 0.5..4.0f64) {
        let sys = MatrixSystem::new(dissipative(seed)).unwrap();
        let x = DMatrix::identity(3, 3);
        let lhs = sys.resolvent(lambda, &x).unwrap() - sys.resolvent(mu, &x).unwrap();
        let rhs = sys.resolvent(lambda, &sys.resolvent(mu, &x).unwrap()).unwrap() * (mu - lambda);
        prop_assert!(op_norm(&(lhs - rhs)) <= 1e-12);

        let tsys = translation();
        let y = tsys.from_fn(|s| (-s * s).exp());
        let mut lhs = tsys.resolvent(lambda, &y).unwrap();
        lhs.axpy(-1.0, &tsys.resolvent(mu, &y).unwrap());
        let mut rhs = tsys.resolvent(lambda, &tsys.resolvent(mu, &y).unwrap()).unwrap();
        rhs.values.iter_mut().for_each(|v| *v *= mu - lambda);
        lhs.axpy(-1.0, &rhs);
        // trapezoid at spacing 1e-2 on both sides
        prop_assert!(tsys.norm(&lhs) <= 1e-3);
    }

    #[test]
    fn lift_and_embed_are_linear(f in piecewise(), g in piecewise(), a in -2.0..2.0f64) {
        let sys = translation();
        let (x, y) = (sys.sample(&f), sys.sample(&g));
        let mut combo = x.clone();
        combo.values.iter_mut().for_each(|v| *v *= a);
        combo.axpy(1.0, &y);
        for op in [lift::<TranslationSystem>, embed_aminus1::<TranslationSystem>] {
            let lhs = op(&sys, &combo).unwrap();
            let rhs = op(&sys, &x).unwrap().scaled(a).add(&op(&sys, &y).unwrap());
            let gap = lhs.regularized.values.iter().zip(&rhs.regularized.values).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
            prop_assert!(gap <= 1e-12 * (1.0 + lhs.norm_minus1()));
        }
    }

    #[test]
    fn reconstruct_inverts_lift(seed in 0u64..1000, k in 0.5..4.0f64, p in 0.0..6.0f64) {
        let sys = MatrixSystem::new(dissipative(seed)).unwrap();
        let x = DMatrix::identity(3, 3);
        let back = reconstruct(&sys, &lift(&sys, &x).unwrap()).unwrap();
        prop_assert!(op_norm(&(back - &x)) <= 1e-10);

        let tsys = translation();
        let y = tsys.from_fn(|s| (k * s + p).sin());
        let mut back = reconstruct(&tsys, &lift(&tsys, &y).unwrap()).unwrap();
        back.axpy(-1.0, &y);
        // central difference at spacing 1e-2
        prop_assert!(tsys.norm(&back) <= 5e-3 * k * k);
    }

    #[test]
    fn zero_perturbation_returns_the_base_semigroup(seed in 0u64..1000, t in 0.0..0.75f64) {
        let (a, _) = random_pair(seed, 3, 0.3, 1.0);
        let sys = MatrixSystem::new(a).unwrap();
        let c = MatrixCoupling::new(sys.clone(), DMatrix::zeros(3, 3), TimeGrid::new(0.25, 25).unwrap()).unwrap();
        let t = (t / 0.01).round() * 0.01;
        let x = DMatrix::identity(3, 3);
        prop_assert_eq!(neumann_semigroup(&c, t, &x, DEFAULT_TOL).unwrap(), sys.propagator(t));
    }

    #[test]
    fn volterra_is_linear_in_b_and_f(seed in 0u64..1000, b1 in matrix(3), b2 in matrix(3), a in -2.0..2.0f64) {
        let (gen, _) = random_pair(seed, 3, 0.3, 1.0);
        let sys = MatrixSystem::new(gen).unwrap();
        let grid = TimeGrid::new(0.2, 20).unwrap();
        let make = |b: DMatrix<f64>| MatrixCoupling::new(sys.clone(), b, grid).unwrap();
        let f1 = VectorTrajectory::from_fn(grid, |r| Ok(sys.propagator(r))).unwrap();
        let f2 = VectorTrajectory::from_fn(grid, |r| Ok(DMatrix::identity(3, 3) * (1.0 + r))).unwrap();
        let f12 = VectorTrajectory::from_fn(grid, |r| Ok(sys.propagator(r) * a + DMatrix::identity(3, 3) * (1.0 + r))).unwrap();
        let n = grid.steps;

        let c1 = make(b1.clone());
        let lhs = volterra_apply(&c1, &f12, n).unwrap();
        let rhs = volterra_apply(&c1, &f1, n).unwrap() * a + volterra_apply(&c1, &f2, n).unwrap();
        prop_assert!(op_norm(&(&lhs - &rhs)) <= 1e-12 * (1.0 + op_norm(&lhs)));

        let lhs = volterra_apply(&make(&b1 * a + &b2), &f1, n).unwrap();
        let rhs = volterra_apply(&c1, &f1, n).unwrap() * a + volterra_apply(&make(b2.clone()), &f1, n).unwrap();
        prop_assert!(op_norm(&(&lhs - &rhs)) <= 1e-12 * (1.0 + op_norm(&lhs)));
    }

    #[test]
    fn perturbed_semigroup_law(seed in 0u64..1000, s in 1usize..40, t in 1usize..40) {
        let (a, b) = random_pair(seed, 3, 0.3, 0.5);
        let c = MatrixCoupling::new(MatrixSystem::new(a.clone()).unwrap(), b.clone(), TimeGrid::with_step(0.25, 1e-3).unwrap()).unwrap();
        let x = DMatrix::identity(3, 3);
        let (s, t) = (s as f64 * 0.01, t as f64 * 0.01);
        let st = neumann_semigroup(&c, s, &neumann_semigroup(&c, t, &x, DEFAULT_TOL).unwrap(), DEFAULT_TOL).unwrap();
        let direct = neumann_semigroup(&c, s + t, &x, DEFAULT_TOL).unwrap();
        prop_assert!(op_norm(&(&st - &direct)) <= 1e-6);
        prop_assert!(op_norm(&(direct - taylor_expm(&((a + b) * (s + t))))) <= 1e-6);
    }

    #[test]
    fn transport_volterra_bounds(mu in measure(), k in 0.5..5.0f64, p in 0.0..6.0f64, x in -1.5..1.5f64, dx in 1usize..20) {
        let prob = TransportProblem::canonical(mu);
        let sys = TranslationSystem::covering(-3.0, 3.0, 1e-2, 0.5, CompactInterval::new(-2.0, 2.0).unwrap()).unwrap();
        let t0 = 0.2;
        let c = prob.coupling(sys.clone(), TimeGrid::with_step(t0, 1e-2).unwrap()).unwrap();
        let traj = VectorTrajectory::from_fn(c.grid(), |r| Ok(sys.from_fn(|s| (k * s + r + p).sin()))).unwrap();
        let f_sup = 1.0;
        let tv = prob.measure.total_variation();
        let psi = volterra_apply(&c, &traj, c.grid().steps).unwrap();
        prop_assert!(psi.sup_norm() <= 2.0 * tv * t0 * f_sup + 1e-12);

        let m_f = tv * f_sup * prob.g.sup_norm();
        let y = x + dx as f64 * sys.spacing;
        // linear interpolation between nodes contributes nothing: both points are nodes
        let (xi, yi) = (((x - sys.origin) / sys.spacing).round() as usize, ((y - sys.origin) / sys.spacing).round() as usize);
        let gap = (psi.values[xi] - psi.values[yi]).abs();
        prop_assert!(gap <= 2.0 * m_f * (sys.node(yi) - sys.node(xi)) + 1e-12);
    }

    #[test]
    fn left_multiplication_is_a_right_module_map(b in int_matrix(3), c in int_matrix(3), d in int_matrix(3)) {
        let k = lift_perturbation(&b);
        prop_assert_eq!(k.apply(&(&c * &d)), k.apply(&c) * &d);
        let u = implement_left(&MatrixSystem::new(b.clone()).unwrap());
        prop_assert!(u.at(0.0).homomorphism_residual() == 0.0);
    }

    #[test]
    fn reports_are_reproducible(values in proptest::collection::vec(-1e6..1e6f64, 1..8), name in "[a-z]{1,8}") {
        let build = || {
            let mut r = Report::new(&name);
            for (i, v) in values.iter().enumerate() {
                r.check_le(&format!("v{i}"), *v, 0.0);
            }
            r.record("values", &values).unwrap();
            r.to_json().unwrap()
        };
        prop_assert_eq!(build(), build());
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 100, ..ProptestConfig::default() })]

    #[test]
    fn left_multiplication_norm_and_round_trip(b in matrix(3)) {
        let m = lift_perturbation(&b);
        prop_assert!((m.norm() - op_norm(&b)).abs() <= 1e-12 * (1.0 + op_norm(&b)));
        prop_assert_eq!(extract_perturbation(&m).unwrap(), b.clone());
        prop_assert_eq!(extract_perturbation(&SuperOperator::general(m.matrix()).unwrap()).unwrap(), b);
    }
}

#[test]
fn half_dirac_rejects_the_tent() {
    let prob = TransportProblem::canonical(BoundedMeasure::atomic(&[(0.0, 0.5)]));
    let tent = PiecewiseFunction::tent();
    let residuals: Vec<f64> = domain_check(&tent, &prob).iter().map(|r| r.residual).collect();
    assert_eq!(residuals, vec![-0.5, 1.0, -0.5]);
    assert!(!in_domain(&tent, &prob));

    let sys = TranslationSystem::covering(-3.0, 3.0, 1e-3, 0.1, CompactInterval::new(-2.0, 2.0).unwrap()).unwrap();
    let c = prob.coupling(sys.clone(), TimeGrid::with_step(0.1, 1e-3).unwrap()).unwrap();
    let out = generator_check(&c, &sys.sample(&tent), &[1e-2], DEFAULT_TOL);
    assert!(matches!(out, Err(Error::NotInX { .. })), "{out:?}");
}

#[test]
fn tent_is_in_the_domain_for_unit_dirac() {
    let prob = TransportProblem::canonical(BoundedMeasure::dirac(0.0));
    let tent = PiecewiseFunction::tent();
    assert!(domain_check(&tent, &prob).iter().all(|r| r.residual == 0.0));
    let sys = TranslationSystem::covering(-3.0, 3.0, 1e-3, 0.1, CompactInterval::new(-2.0, 2.0).unwrap()).unwrap();
    let c = prob.coupling(sys.clone(), TimeGrid::with_step(0.1, 1e-3).unwrap()).unwrap();
    let res = generator_check(&c, &sys.sample(&tent), &[4e-3, 2e-3], DEFAULT_TOL).unwrap();
    assert!(res[1].1 < res[0].1 && res[1].1 < 0.05, "{res:?}");
}
