//! `painleve`: simulation and closed-form analysis of a rigid rod slipping
//! on a compliant frictional surface, in and around the paradoxical regime.

use clap::{Parser, Subcommand};
use painleve_cli::commands::{
    self, ConvergeArgs, GlobalOpts, Kappa1Args, OutputFormat, PhaseMapArgs, SeparatrixArgs,
};
use painleve_cli::error::CliError;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "painleve",
    version,
    about = "Rod-on-surface contact experiments: regime maps, restitution curves, impact without collision"
)]
struct Cli {
    /// Scenario or sweep file (TOML) for commands that take one.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory that receives all emitted files.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    /// Which outputs to write.
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Csv)]
    format: OutputFormat,
    /// Integration tolerance override (rtol; atol follows as tol/1000).
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario file through the hybrid integrator.
    Simulate,
    /// Restitution curve over an inclination or damping grid, with both
    /// asymptotes and an independent numerical check per point.
    SweepE,
    /// Raster of contact regimes over (theta, phi).
    PhaseMap(PhaseMapArgs),
    /// Phase portrait of the contact-entry layer at frozen angles.
    Kappa1(Kappa1Args),
    /// Escape/capture threshold on the entry speed: closed form vs bisection.
    Separatrix(SeparatrixArgs),
    /// Finite-stiffness convergence of the impact map as eps shrinks.
    Converge(ConvergeArgs),
    /// Release two rods that differ only by a hair of height: one grazes,
    /// one undergoes impact without collision.
    TwoRod,
}

fn worker_pool() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("PAINLEVE_WORKERS") else {
        return Ok(());
    };
    let n: usize = raw
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| {
            CliError::Config(format!(
                "PAINLEVE_WORKERS must be a positive integer, got {raw:?}"
            ))
        })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Runtime(format!("worker pool: {e}")))
}

fn run(cli: &Cli) -> Result<(), CliError> {
    worker_pool()?;
    let opts = GlobalOpts {
        out_dir: cli.out_dir.clone(),
        format: cli.format,
        tol: cli.tol,
    };
    if let Some(tol) = cli.tol {
        if !(tol.is_finite() && tol > 0.0) {
            return Err(CliError::Config(format!("--tol must be positive, got {tol}")));
        }
    }
    let config = cli.config.as_deref();
    match &cli.command {
        Command::Simulate => commands::simulate_cmd(&opts, config),
        Command::SweepE => commands::sweep_e_cmd(&opts, config),
        Command::PhaseMap(args) => commands::phase_map_cmd(&opts, args),
        Command::Kappa1(args) => commands::kappa1_cmd(&opts, args),
        Command::Separatrix(args) => commands::separatrix_cmd(&opts, args),
        Command::Converge(args) => commands::converge_cmd(&opts, args),
        Command::TwoRod => commands::two_rod_cmd(&opts, config),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
