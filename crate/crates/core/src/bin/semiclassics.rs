use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use semiclassics::cli::{run, Invocation, Pipeline};
use semiclassics::Orientation;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Convention {
    #[value(name = "A", alias = "a")]
    A,
    #[value(name = "B", alias = "b")]
    B,
}

#[derive(Debug, Parser)]
#[command(version, about = "Semiclassical Heisenberg evolution in double phase space")]
struct Args {
    #[command(subcommand)]
    command: Command,
    /// Run configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config's `output`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Orientation override for bring-up comparisons.
    #[arg(long, global = true, value_enum)]
    seed_convention: Option<Convention>,
    /// Only log errors.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Single or double phase-space characteristics.
    Trajectory,
    /// Weyl, chord or mixed propagators on a grid.
    Kernel,
    /// Evolve a symbol through the mixed propagators.
    Evolve,
    /// Caustic events along characteristics.
    Caustics,
    /// Hamilton-Jacobi residual of an accumulated action field.
    HjResidual,
    /// Engine kernels against exact closed forms.
    OracleCompare,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let level = if args.quiet { "error" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let pipeline = match args.command {
        Command::Trajectory => Pipeline::Trajectory,
        Command::Kernel => Pipeline::Kernel,
        Command::Evolve => Pipeline::Evolve,
        Command::Caustics => Pipeline::Caustics,
        Command::HjResidual => Pipeline::HjResidual,
        Command::OracleCompare => Pipeline::OracleCompare,
    };
    let Some(config) = args.config else {
        eprintln!("error: --config <path> is required");
        return ExitCode::from(2);
    };
    let manifest = run(&Invocation {
        pipeline,
        config,
        out: args.out,
        seed_convention: args.seed_convention.map(|c| match c {
            Convention::A => Orientation::Forward,
            Convention::B => Orientation::Backward,
        }),
    });
    if !args.quiet {
        for (name, value) in &manifest.max_residuals {
            log::info!("{name}: {value:e}");
        }
    }
    ExitCode::from(manifest.exit_code() as u8)
}
