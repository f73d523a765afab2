//! `ergodens`: simulate diffusions, estimate their invariant densities and
//! run the bandwidth-selection and convergence-rate experiments.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ergodens_core::Error as CoreError;

use commands::{CheckFailed, Context};
use config::{ConfigError, RunConfig};

#[derive(Parser)]
#[command(name = "ergodens", version, about = "Invariant density estimation for ergodic diffusions")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override a config entry, e.g. `--set sim.dt=0.005`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,

    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "ERGODENS_THREADS")]
    threads: Option<usize>,

    /// Write gnuplot-ready `.dat` files where available.
    #[arg(long, global = true)]
    plot_data: bool,

    /// Write the simulated path to this file.
    #[arg(long, global = true)]
    dump_path: Option<PathBuf>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Check the moment conditions of the order-M kernels.
    KernelCheck,
    /// Simulate a path and report per-axis summary statistics.
    Simulate,
    /// Kernel density estimate at a point or on a grid.
    Estimate,
    /// Goldenshluger–Lepski bandwidth selection on one path.
    Adapt,
    /// MSE over a ladder of horizons and the fitted convergence rate.
    Rate,
    /// Autocovariance of the kernel evaluations over time lags.
    Mixing,
    /// Oracle ratio of the selection rule for several penalty constants.
    CalibratePenalty,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::KernelCheck => "kernel-check",
            Command::Simulate => "simulate",
            Command::Estimate => "estimate",
            Command::Adapt => "adapt",
            Command::Rate => "rate",
            Command::Mixing => "mixing",
            Command::CalibratePenalty => "calibrate-penalty",
        }
    }
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let config = RunConfig::load(cli.config.as_deref(), &cli.overrides)?;
    let ctx = Context { out: cli.out.clone(), plot_data: cli.plot_data, dump_path: cli.dump_path.clone() };
    match cli.command {
        Command::KernelCheck => commands::kernel_check::run(&config, &ctx),
        Command::Simulate => commands::simulate::run(&config, &ctx),
        Command::Estimate => commands::estimate::run(&config, &ctx),
        Command::Adapt => commands::adapt::run(&config, &ctx),
        Command::Rate => commands::rate::run(&config, &ctx),
        Command::Mixing => commands::mixing::run(&config, &ctx),
        Command::CalibratePenalty => commands::calibrate::run(&config, &ctx),
    }
}

/// 2: configuration, 3: numerical divergence, 4: failed check, 1: anything else.
fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<ConfigError>().is_some() {
        return 2;
    }
    if err.downcast_ref::<CheckFailed>().is_some() {
        return 4;
    }
    match err.downcast_ref::<CoreError>() {
        Some(CoreError::Divergence { .. } | CoreError::DivergenceBudget { .. }) => 3,
        Some(CoreError::Data(_)) => 1,
        Some(_) => 2,
        None => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("ergodens {}: {err:#}", cli.command.name());
            ExitCode::from(exit_code(&err))
        }
    }
}
