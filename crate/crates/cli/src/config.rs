use std::fmt;
use std::path::Path;

use clap::ValueEnum;
use semiperturb::functions::BoundedMeasure;
use semiperturb::transport::{GSelection, ProblemConfig, TransportProblem};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    MatrixDemo,
    TransportDemo,
    ImplementedDemo,
    Admissibility,
    Convergence,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Self::MatrixDemo => "matrix-demo",
            Self::TransportDemo => "transport-demo",
            Self::ImplementedDemo => "implemented-demo",
            Self::Admissibility => "admissibility",
            Self::Convergence => "convergence",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Profile {
    #[default]
    Fast,
    Full,
}

/// A field that failed validation.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub field: &'static str,
    pub message: String,
}

impl ConfigError {
    fn new(field: &'static str, message: impl Into<String>) -> Self {
        Self { field, message: message.into() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid config field `{}`: {}", self.field, self.message)
    }
}

impl std::error::Error for ConfigError {}

/// Everything a run may override; unset fields take per-experiment defaults.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    pub tol: Option<f64>,
    pub seed: Option<u64>,
    pub dt: Option<f64>,
    pub grid_spacing: Option<f64>,
    pub t0: Option<f64>,
    pub t: Option<f64>,
    pub dim: Option<usize>,
    pub profile: Option<Profile>,
    pub problem: Option<ProblemConfig>,
}

impl Overrides {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new("config", format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| ConfigError::new("config", format!("{}: {e}", path.display())))
    }

    /// `self` with every field set in `other` replaced.
    pub fn merged(self, other: Overrides) -> Self {
        Self {
            tol: other.tol.or(self.tol),
            seed: other.seed.or(self.seed),
            dt: other.dt.or(self.dt),
            grid_spacing: other.grid_spacing.or(self.grid_spacing),
            t0: other.t0.or(self.t0),
            t: other.t.or(self.t),
            dim: other.dim.or(self.dim),
            profile: other.profile.or(self.profile),
            problem: other.problem.or(self.problem),
        }
    }
}

/// Fully resolved and validated run parameters.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub profile: Profile,
    pub seed: u64,
    /// Bound of the experiment's headline assertion.
    pub tol: f64,
    pub dt: f64,
    pub grid_spacing: f64,
    pub t0: f64,
    pub t: f64,
    pub dim: usize,
    pub problem: Option<ProblemConfig>,
}

fn two_atom() -> ProblemConfig {
    ProblemConfig {
        measure: BoundedMeasure::atomic(&[(0.0, 1.0), (0.3, 0.5)]),
        g: GSelection::Canonical,
        u0: None,
    }
}

fn unit_dirac() -> ProblemConfig {
    ProblemConfig { measure: BoundedMeasure::dirac(0.0), g: GSelection::Canonical, u0: None }
}

fn positive(field: &'static str, v: f64) -> Result<f64, ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(ConfigError::new(field, format!("must be finite and positive, got {v}")))
    }
}

fn multiple_of(field: &'static str, v: f64, unit: &'static str, u: f64) -> Result<usize, ConfigError> {
    let k = (v / u).round();
    if k < 1.0 || (k * u - v).abs() > 1e-9 * v {
        return Err(ConfigError::new(field, format!("{v} is not a positive multiple of {unit} = {u}")));
    }
    Ok(k as usize)
}

impl RunConfig {
    pub fn resolve(experiment: Experiment, o: Overrides) -> Result<Self, ConfigError> {
        use Experiment::*;
        let (tol, dt, t0, t, dim, problem) = match experiment {
            MatrixDemo => (1e-6, 1e-3, 0.25, 2.0, 4, None),
            TransportDemo => (1e-3, 1e-3, 0.2, 1.0, 0, Some(two_atom())),
            ImplementedDemo => (1e-6, 1e-3, 0.25, 1.0, 3, None),
            Admissibility => (1e-12, 1e-3, 0.2, 0.2, 0, Some(unit_dirac())),
            Convergence => (0.2, 2e-3, 0.2, 1.0, 0, Some(two_atom())),
        };
        let dt = positive("dt", o.dt.unwrap_or(dt))?;
        let cfg = Self {
            experiment,
            profile: o.profile.unwrap_or_default(),
            seed: o.seed.unwrap_or(1),
            tol: positive("tol", o.tol.unwrap_or(tol))?,
            grid_spacing: positive("grid_spacing", o.grid_spacing.unwrap_or(dt))?,
            dt,
            t0: positive("t0", o.t0.unwrap_or(t0))?,
            t: positive("t", o.t.unwrap_or(t))?,
            dim: o.dim.unwrap_or(dim),
            problem: if problem.is_some() { o.problem.or(problem) } else { None },
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        multiple_of("t0", self.t0, "dt", self.dt)?;
        multiple_of("t", self.t, "dt", self.dt)?;
        match self.experiment {
            Experiment::MatrixDemo | Experiment::ImplementedDemo => {
                if !(1..=8).contains(&self.dim) {
                    return Err(ConfigError::new("dim", format!("must lie in 1..=8, got {}", self.dim)));
                }
            }
            _ => {
                multiple_of("dt", self.dt, "grid_spacing", self.grid_spacing)?;
                if self.t > 5.0 {
                    return Err(ConfigError::new("t", format!("transport runs are limited to t <= 5, got {}", self.t)));
                }
                if (self.t + 4.0) / self.grid_spacing > 2e6 {
                    return Err(ConfigError::new("grid_spacing", format!("{} gives more than 2e6 grid nodes", self.grid_spacing)));
                }
                self.transport_problem()?;
            }
        }
        if self.experiment == Experiment::Convergence && self.dt / 16.0 < 1e-5 {
            return Err(ConfigError::new("dt", format!("coarsest level {} leaves a reference step below 1e-5", self.dt)));
        }
        Ok(())
    }

    pub fn transport_problem(&self) -> Result<TransportProblem, ConfigError> {
        let p = self.problem.as_ref().ok_or_else(|| ConfigError::new("problem", "missing"))?;
        p.build().map_err(|e| ConfigError::new("problem", e.to_string()))
    }
}
