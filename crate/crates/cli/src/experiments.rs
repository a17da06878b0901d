use nalgebra::DMatrix;
use semiperturb::functions::{CompactInterval, GridFunction, PiecewiseFunction};
use semiperturb::implemented::{
    comparison_equivalence, extract_perturbation, implement_left, lift_perturbation, pseudoresolvent_extract,
    PerturbedImplemented, SuperOperator,
};
use semiperturb::perturbation::{
    admissibility_check, neumann_run, neumann_semigroup, Coupling, MatrixCoupling, TimeGrid, VectorTrajectory,
    DEFAULT_TOL,
};
use semiperturb::report::{emit_convergence, Order, Report};
use semiperturb::rng::{seeded, stable_matrix, uniform_matrix};
use semiperturb::semigroup::{expm, op_norm, MatrixSystem, Semigroup, TranslationSystem};
use semiperturb::transport::{domain_check, oracle_solve, run_perturbed, TransportProblem};
use semiperturb::{Error, Result};

use crate::config::{Experiment, Profile, RunConfig};

/// Report plus the CSV data file of one run.
pub struct Artifacts {
    pub report: Report,
    pub csv: Vec<u8>,
}

pub fn run(cfg: &RunConfig) -> Result<Artifacts> {
    match cfg.experiment {
        Experiment::MatrixDemo => matrix_demo(cfg),
        Experiment::TransportDemo => transport_demo(cfg),
        Experiment::ImplementedDemo => implemented_demo(cfg),
        Experiment::Admissibility => admissibility(cfg),
        Experiment::Convergence => convergence(cfg),
    }
}

fn csv_table<R: AsRef<[String]>>(header: &[&str], rows: &[R]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r.as_ref())?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// `t, t/2, t/4, ...` rounded to multiples of `dt`, distinct and positive, ascending.
fn sample_times(t: f64, dt: f64, count: usize) -> Vec<f64> {
    let mut steps: Vec<u64> = (0..count).map(|k| ((t / 2f64.powi(k as i32)) / dt).round() as u64).filter(|&s| s > 0).collect();
    steps.sort_unstable();
    steps.dedup();
    steps.into_iter().map(|s| s as f64 * dt).collect()
}

fn window() -> CompactInterval {
    CompactInterval::new(-2.0, 2.0).expect("static window")
}

fn transport_system(cfg: &RunConfig, horizon: f64) -> Result<TranslationSystem> {
    TranslationSystem::covering(-3.0, 3.0 + horizon, cfg.grid_spacing, horizon, window())
}

fn window_gap(sys: &TranslationSystem, a: &GridFunction, b: &GridFunction) -> f64 {
    (0..a.count())
        .filter(|&i| sys.window.contains(a.node(i)))
        .map(|i| (a.values[i] - b.values[i]).abs())
        .fold(0.0, f64::max)
}

fn matrix_demo(cfg: &RunConfig) -> Result<Artifacts> {
    let mut report = Report::new("matrix-demo").with_config(cfg)?;
    let seeds = if cfg.profile == Profile::Full { 10 } else { 3 };
    let grid = TimeGrid::with_step(cfg.t0, cfg.dt)?;
    let times = sample_times(cfg.t, cfg.dt, 3);
    let mut rows = Vec::new();
    let (mut worst, mut guard): (f64, f64) = (0.0, 0.0);
    for k in 0..seeds {
        let seed = cfg.seed + k;
        let mut rng = seeded(seed);
        let a = stable_matrix(&mut rng, cfg.dim, 0.5);
        let b0 = uniform_matrix(&mut rng, cfg.dim, cfg.dim);
        let sys = MatrixSystem::new(a.clone())?;
        let unit = MatrixCoupling::new(sys.clone(), b0.clone(), grid)?.analytic_bound().unwrap_or(1.0);
        let b = b0 * (0.3 / unit);
        let c = MatrixCoupling::new(sys, b.clone(), grid)?;
        guard = guard.max(c.analytic_bound().unwrap_or(0.0));
        let x = DMatrix::identity(cfg.dim, cfg.dim);
        for &t in &times {
            let err = op_norm(&(neumann_semigroup(&c, t, &x, DEFAULT_TOL)? - expm(&((&a + &b) * t))));
            worst = worst.max(err);
            rows.push(vec![seed.to_string(), num(t), num(err)]);
        }
    }
    report.check_le("max_oracle_error", worst, cfg.tol);
    report.check_lt("volterra_norm_bound", guard, 1.0);
    report.record("seeds", &seeds)?;
    report.record("times", &times)?;
    Ok(Artifacts { report, csv: csv_table(&["seed", "t", "error"], &rows)? })
}

fn transport_demo(cfg: &RunConfig) -> Result<Artifacts> {
    let mut report = Report::new("transport-demo").with_config(cfg)?;
    let prob = cfg.transport_problem().map_err(|e| Error::InvalidInput(e.to_string()))?;
    let sys = transport_system(cfg, cfg.t.max(cfg.t0))?;
    let u = run_perturbed(&prob, &sys, TimeGrid::with_step(cfg.t0, cfg.dt)?, cfg.t, DEFAULT_TOL)?;
    let steps = (cfg.t / cfg.dt).round() as usize;
    let oracle = oracle_solve(&prob, cfg.t, cfg.dt)?.to_grid(&sys, steps);
    let gap = window_gap(&sys, &u, &oracle);
    report.check_le("oracle_disagreement", gap, cfg.tol);
    if prob.measure.is_zero() {
        let free = sys.apply(cfg.t, &sys.sample(&prob.u0))?;
        report.check_le("identity_transport_gap", window_gap(&sys, &u, &free), 0.0);
    }
    report.record("jump_gaps", &prob.gaps())?;
    report.record("u0_domain_residuals", &domain_check(&prob.u0, &prob))?;
    report.record("volterra_bound", &prob.volterra_bound(cfg.t0))?;
    let rows: Vec<Vec<String>> = (0..u.count())
        .filter(|&i| sys.window.contains(u.node(i)))
        .map(|i| vec![num(u.node(i)), num(u.values[i]), num(oracle.values[i])])
        .collect();
    Ok(Artifacts { report, csv: csv_table(&["x", "u", "oracle"], &rows)? })
}

fn implemented_demo(cfg: &RunConfig) -> Result<Artifacts> {
    let mut report = Report::new("implemented-demo").with_config(cfg)?;
    let n = cfg.dim;
    let mut rng = seeded(cfg.seed);
    let a = stable_matrix(&mut rng, n, 0.5);
    let b0 = uniform_matrix(&mut rng, n, n);
    let b = &b0 * (0.3 / op_norm(&b0).max(f64::MIN_POSITIVE));
    let sys = MatrixSystem::new(a.clone())?;
    let u = implement_left(&sys);
    let v = PerturbedImplemented::new(&u, &lift_perturbation(&b), TimeGrid::with_step(cfg.t0, cfg.dt)?, DEFAULT_TOL)?;

    let times = sample_times(cfg.t, cfg.dt, 6);
    let s = uniform_matrix(&mut rng, n, n);
    let mut worst: f64 = 0.0;
    for &t in &times {
        worst = worst.max(op_norm(&(v.apply(t, &s)? - expm(&((&a + &b) * t)) * &s)));
    }
    report.check_le("max_correspondence_error", worst, cfg.tol);

    let lifted = lift_perturbation(&b);
    report.check("extract_lift_round_trip_exact", extract_perturbation(&lifted)? == b);
    report.check_le("left_multiplication_norm_gap", (lifted.norm() - op_norm(&b)).abs(), 1e-12);
    let f = uniform_matrix(&mut rng, n, n);
    let g = uniform_matrix(&mut rng, n, n);
    let rejected = n > 1 && matches!(extract_perturbation(&SuperOperator::rank_one(&f, &g)), Err(Error::NonMultiplicative { .. }));
    report.check("rank_one_superoperator_rejected", rejected || n == 1);

    let omega = sys.growth_bound().max(0.0);
    let pr = pseudoresolvent_extract(|l| u.resolvent(l), omega + 2.0, omega + 5.0)?;
    report.check_le("pseudoresolvent_residual", pr.residual, 1e-10);

    let pairs = comparison_equivalence(&sys, |t| v.base_at(t), &times)?;
    let rows: Vec<Vec<String>> = times.iter().zip(&pairs).map(|(t, p)| vec![num(*t), num(p.0), num(p.1)]).collect();
    let eq_gap = pairs.iter().map(|p| (p.0 - p.1).abs()).fold(0.0, f64::max);
    report.check_le("comparison_norm_equality_gap", eq_gap, 1e-10);
    report.record("times", &times)?;
    Ok(Artifacts { report, csv: csv_table(&["t", "implemented_gap", "base_gap"], &rows)? })
}

fn probes(sys: &TranslationSystem, prob: &TransportProblem, grid: TimeGrid, extra: usize) -> Result<Vec<VectorTrajectory<GridFunction>>> {
    let u0 = sys.sample(&prob.u0);
    let tent = sys.sample(&PiecewiseFunction::tent());
    let mut out = vec![
        VectorTrajectory::constant(grid, u0.clone()),
        VectorTrajectory::from_fn(grid, |r| sys.apply(r, &tent))?,
        VectorTrajectory::constant(grid, sys.from_fn(|_| 1.0)),
    ];
    for k in 1..=extra {
        let w = k as f64;
        out.push(VectorTrajectory::from_fn(grid, |r| Ok(sys.from_fn(|x| (w * x + 0.7 * w * r).sin())))?);
    }
    Ok(out)
}

fn admissibility(cfg: &RunConfig) -> Result<Artifacts> {
    let mut report = Report::new("admissibility").with_config(cfg)?;
    let prob = cfg.transport_problem().map_err(|e| Error::InvalidInput(e.to_string()))?;
    let sys = transport_system(cfg, cfg.t0)?;
    let grid = TimeGrid::with_step(cfg.t0, cfg.dt)?;
    let c = prob.coupling(sys.clone(), grid)?;
    let extra = if cfg.profile == Profile::Full { 8 } else { 3 };
    let probes = probes(&sys, &prob, grid, extra)?;
    let adm = admissibility_check(&c, &probes, cfg.tol, CompactInterval::new(-1.0, 1.0)?)?;
    report.check("cond_a_integral_in_state_space", adm.cond_a.pass);
    report.check("cond_b_seminorm_constant_finite", adm.cond_b.k.is_finite());
    report.check_lt("cond_c_volterra_norm", adm.cond_c.m, 0.5);
    report.record("admissibility", &adm)?;

    let rows: Vec<Vec<String>> = match neumann_run(&c, &sys.sample(&prob.u0), DEFAULT_TOL) {
        Ok(run) => run.ratios().iter().enumerate().map(|(k, r)| vec![(k + 1).to_string(), num(*r)]).collect(),
        Err(e) => {
            report.record("neumann_error", &e.to_string())?;
            Vec::new()
        }
    };
    Ok(Artifacts { report, csv: csv_table(&["term", "ratio"], &rows)? })
}

fn convergence(cfg: &RunConfig) -> Result<Artifacts> {
    let mut report = Report::new("convergence").with_config(cfg)?;
    let prob = cfg.transport_problem().map_err(|e| Error::InvalidInput(e.to_string()))?;
    let count = if cfg.profile == Profile::Full { 4 } else { 3 };
    let dts: Vec<f64> = (0..count).map(|k| cfg.dt / 2f64.powi(k)).collect();
    let reference = oracle_solve(&prob, cfg.t, dts[count as usize - 1] / 4.0)?;
    let xs: Vec<f64> = (0..=80).map(|i| -2.0 + 0.05 * i as f64).collect();
    let want: Vec<f64> = xs.iter().map(|&x| reference.eval(x)).collect();
    let mut levels = Vec::new();
    for &dt in &dts {
        let sol = oracle_solve(&prob, cfg.t, dt)?;
        let err = xs.iter().zip(&want).map(|(&x, w)| (sol.eval(x) - w).abs()).fold(0.0, f64::max);
        levels.push((dt, err));
    }
    let mut csv = Vec::new();
    let rows = emit_convergence(&levels, &mut csv)?;
    for r in &rows {
        match r.order {
            Some(Order::Observed(p)) => {
                report.check_le(&format!("order_deviation_dt_{:e}", r.dt), (p - 2.0).abs(), cfg.tol);
            }
            Some(Order::Exact) => {
                report.check("exact_match", true);
            }
            None => {}
        }
    }
    report.record("levels", &rows)?;
    Ok(Artifacts { report, csv })
}
