//! `semiperturb` experiment runner.
//!
//! Exit status: 0 when every assertion passes, 1 when one fails or the
//! computation errors, 2 when the configuration is invalid.

mod config;
mod experiments;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;

use config::{ConfigError, Experiment, Overrides, Profile, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "semiperturb", version, about = "Run perturbed-semigroup experiments and write JSON/CSV reports")]
struct Cli {
    #[arg(value_enum)]
    experiment: Experiment,
    /// JSON file with parameter overrides; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for `<experiment>.json` and `<experiment>.csv`.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Bound of the headline assertion.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    grid_spacing: Option<f64>,
    #[arg(long)]
    t0: Option<f64>,
    /// Final time.
    #[arg(long)]
    t: Option<f64>,
    #[arg(long, value_enum)]
    profile: Option<Profile>,
}

impl Cli {
    fn overrides(&self) -> Overrides {
        Overrides {
            tol: self.tol,
            seed: self.seed,
            dt: self.dt,
            grid_spacing: self.grid_spacing,
            t0: self.t0,
            t: self.t,
            dim: None,
            profile: self.profile,
            problem: None,
        }
    }
}

fn configure_threads() -> Result<(), ConfigError> {
    let Ok(raw) = std::env::var("SEMIPERTURB_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| ConfigError {
        field: "SEMIPERTURB_THREADS",
        message: format!("must be a positive integer, got {raw:?}"),
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| ConfigError { field: "SEMIPERTURB_THREADS", message: e.to_string() })
}

fn resolve(cli: &Cli) -> Result<RunConfig, ConfigError> {
    configure_threads()?;
    let file = match &cli.config {
        Some(p) => Overrides::from_file(p)?,
        None => Overrides::default(),
    };
    RunConfig::resolve(cli.experiment, file.merged(cli.overrides()))
}

fn write_outputs(dir: &Path, name: &str, json: &str, csv: &[u8]) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(format!("{name}.json")), json)?;
    std::fs::write(dir.join(format!("{name}.csv")), csv)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match resolve(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let name = cfg.experiment.name();
    let artifacts = match experiments::run(&cfg) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {name} failed: {e}");
            return ExitCode::from(1);
        }
    };
    let json = match artifacts.report.to_json() {
        Ok(j) => j,
        Err(e) => {
            eprintln!("error: cannot serialize report: {e}");
            return ExitCode::from(1);
        }
    };
    if let Err(e) = write_outputs(&cli.out, name, &json, &artifacts.csv) {
        eprintln!("error: cannot write outputs to {}: {e}", cli.out.display());
        return ExitCode::from(1);
    }
    for a in artifacts.report.assertions() {
        println!(
            "{} {}: {:.6e} {} {:.6e}",
            if a.pass { "PASS" } else { "FAIL" },
            a.name,
            a.measured,
            a.relation,
            a.bound
        );
    }
    if artifacts.report.pass() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
