//! `kapitza`: periodic orbits, stability charts and analytic checks for the
//! vibrated inverted pendulum.
//!
//! Exit codes: 0 success, 1 numerical failure, 2 invalid configuration,
//! 3 partial result.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use config::CliError;

#[derive(Parser)]
#[command(name = "kapitza", version, about = "Periodic non-falling solutions of the vibrated inverted pendulum")]
struct Cli {
    /// JSON file with the command's parameters (or a manifest.json from an
    /// earlier run); flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "kapitza-out")]
    out: PathBuf,
    /// Worker threads for grid scans (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Integrator tolerance (relative and absolute).
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the averaged or original system and dump `t,phi,p`.
    Simulate(SimulateArgs),
    /// Force that makes φ(t) = π − A cos t a solution of the averaged system.
    InverseForce(InverseForceArgs),
    /// Find 2π-periodic non-falling orbits and classify their stability.
    Orbits(OrbitsArgs),
    /// Stability of φ(t) = π − A cos t over an (A, a) grid.
    Region(RegionArgs),
    /// Critical vibration amplitude a*(A) for one or more μ.
    Curve(CurveArgs),
    /// All periodic orbits for each a in a list at fixed A and μ.
    Bifurcate(BifurcateArgs),
    /// Closed-form conditions and bounds for one parameter set.
    Check(CheckArgs),
}

#[derive(Args, Serialize, Default)]
struct ForcingArgs {
    /// zero or harmonic.
    #[arg(long = "forcing")]
    #[serde(skip)]
    kind: Option<String>,
    /// Harmonic amplitude (implies --forcing harmonic).
    #[arg(long)]
    #[serde(skip)]
    amplitude: Option<f64>,
    /// Harmonic phase in radians.
    #[arg(long)]
    #[serde(skip)]
    phase: Option<f64>,
    /// Forcing as JSON (see docs/forcing.schema.json).
    #[arg(long)]
    #[serde(skip)]
    forcing_file: Option<PathBuf>,
}

impl ForcingArgs {
    fn value(&self) -> Result<Option<serde_json::Value>, CliError> {
        config::forcing_flag(self.kind.as_deref(), self.amplitude, self.phase, self.forcing_file.as_deref())
    }
}

#[derive(Args, Serialize)]
struct SimulateArgs {
    /// averaged or original.
    #[arg(long)]
    system: Option<String>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    a: Option<f64>,
    /// Vibration frequency ratio for the original system (ε = 1/k).
    #[arg(long)]
    k: Option<f64>,
    #[arg(long)]
    phi0: Option<f64>,
    #[arg(long)]
    p0: Option<f64>,
    /// Duration.
    #[arg(long = "T")]
    #[serde(rename = "T")]
    duration: Option<f64>,
    #[arg(long)]
    t0: Option<f64>,
    /// Output rows, endpoints included.
    #[arg(long)]
    samples: Option<usize>,
    /// Use fixed-step RK4 with this many steps (bitwise reproducible).
    #[arg(long)]
    fixed_steps: Option<usize>,
    #[command(flatten)]
    #[serde(skip)]
    forcing: ForcingArgs,
}

#[derive(Args, Serialize)]
struct InverseForceArgs {
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long = "A")]
    #[serde(rename = "A")]
    amplitude: Option<f64>,
    #[arg(long)]
    samples: Option<usize>,
}

#[derive(Args, Serialize)]
struct OrbitsArgs {
    #[arg(long)]
    system: Option<String>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    k: Option<f64>,
    /// Seed grid points per axis.
    #[arg(long)]
    grid: Option<usize>,
    /// Single Newton start "phi0,p0".
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    seed: Option<Vec<f64>>,
    #[command(flatten)]
    #[serde(skip)]
    forcing: ForcingArgs,
}

#[derive(Args, Serialize)]
struct RegionArgs {
    #[arg(long)]
    mu: Option<f64>,
    /// "min,max".
    #[arg(long = "A-range", value_delimiter = ',')]
    #[serde(rename = "A_range")]
    amplitude_range: Option<Vec<f64>>,
    /// "min,max".
    #[arg(long, value_delimiter = ',')]
    a_range: Option<Vec<f64>>,
    #[arg(long = "n-A")]
    #[serde(rename = "n_A")]
    n_amplitude: Option<usize>,
    #[arg(long)]
    n_a: Option<usize>,
}

#[derive(Args, Serialize)]
struct CurveArgs {
    /// One or more friction values, comma separated.
    #[arg(long, value_delimiter = ',')]
    mu: Option<Vec<f64>>,
    #[arg(long = "A-max")]
    #[serde(rename = "A_max")]
    amplitude_max: Option<f64>,
    #[arg(long = "A-step")]
    #[serde(rename = "A_step")]
    amplitude_step: Option<f64>,
    /// Shape of the forcing family as JSON; default cos t.
    #[arg(long)]
    #[serde(skip)]
    shape_file: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct BifurcateArgs {
    #[arg(long = "A", allow_negative_numbers = true)]
    #[serde(rename = "A")]
    amplitude: Option<f64>,
    #[arg(long)]
    mu: Option<f64>,
    /// Vibration amplitudes, comma separated.
    #[arg(long, value_delimiter = ',')]
    a: Option<Vec<f64>>,
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    #[serde(skip)]
    shape_file: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct CheckArgs {
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    a: Option<f64>,
    /// Lebesgue exponent for the stability criterion (default ∞).
    #[arg(long)]
    norm_k: Option<f64>,
    #[command(flatten)]
    #[serde(skip)]
    forcing: ForcingArgs,
}

fn with_forcing(
    mut flags: serde_json::Map<String, serde_json::Value>,
    key: &str,
    v: Option<serde_json::Value>,
) -> serde_json::Map<String, serde_json::Value> {
    if let Some(v) = v {
        flags.insert(key.into(), v);
    }
    flags
}

fn shape_flag(path: Option<&std::path::Path>) -> Result<Option<serde_json::Value>, CliError> {
    config::forcing_flag(None, None, None, path).map_err(|e| CliError::config(e.message.replace("`forcing`", "`shape`")))
}

fn run(cli: Cli) -> Result<i32, CliError> {
    let name = match &cli.command {
        Command::Simulate(_) => "simulate",
        Command::InverseForce(_) => "inverse-force",
        Command::Orbits(_) => "orbits",
        Command::Region(_) => "region",
        Command::Curve(_) => "curve",
        Command::Bifurcate(_) => "bifurcate",
        Command::Check(_) => "check",
    };
    let file = match &cli.config {
        Some(p) => config::read_config_file(p, name)?,
        None => config::FileConfig { block: Default::default(), tol: None },
    };
    let tol = cli.tol.or(file.tol);
    if let Some(t) = tol {
        if !(t.is_finite() && t > 0.0) {
            return Err(CliError::config(format!("invalid config field `tol`: must be > 0, got {t}")));
        }
    }
    if let Some(n) = cli.jobs {
        if n == 0 {
            return Err(CliError::config("invalid config field `jobs`: must be >= 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::numerical(format!("thread pool: {e}")))?;
    }
    let ctx = commands::Context { out: cli.out.clone(), tol, command: name };
    let base = file.block;
    match &cli.command {
        Command::Simulate(a) => {
            let flags = with_forcing(config::flag_map(a), "forcing", a.forcing.value()?);
            commands::simulate(&ctx, config::resolve(base, flags)?)
        }
        Command::InverseForce(a) => commands::inverse_force(&ctx, config::resolve(base, config::flag_map(a))?),
        Command::Orbits(a) => {
            let flags = with_forcing(config::flag_map(a), "forcing", a.forcing.value()?);
            commands::orbits(&ctx, config::resolve(base, flags)?)
        }
        Command::Region(a) => commands::region(&ctx, config::resolve(base, config::flag_map(a))?),
        Command::Curve(a) => {
            let flags = with_forcing(config::flag_map(a), "shape", shape_flag(a.shape_file.as_deref())?);
            commands::curve(&ctx, config::resolve(base, flags)?)
        }
        Command::Bifurcate(a) => {
            let flags = with_forcing(config::flag_map(a), "shape", shape_flag(a.shape_file.as_deref())?);
            commands::bifurcate(&ctx, config::resolve(base, flags)?)
        }
        Command::Check(a) => {
            let flags = with_forcing(config::flag_map(a), "forcing", a.forcing.value()?);
            commands::check(&ctx, config::resolve(base, flags)?)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code as u8)
        }
    }
}
