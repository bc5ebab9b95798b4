//! `frontier`: batch pipeline from raw sales to frontier, tax and bound artifacts.

mod artifacts;
mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use frontier_core::frontier::FitMode;

use crate::artifacts::Workspace;
use crate::commands::Context;
use crate::config::PipelineConfig;
use crate::error::{CliError, Result};

#[derive(Parser)]
#[command(name = "frontier", version, about = "Cost frontier and regulatory tax estimation")]
struct Cli {
    /// Pipeline configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the seed in the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Artifact directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Constrained,
    PerHeight,
    Quartic,
}

impl From<Mode> for FitMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Constrained => FitMode::Constrained,
            Mode::PerHeight => FitMode::PerHeight,
            Mode::Quartic => FitMode::Quartic,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Load, filter and deflate transactions.
    Ingest,
    /// Fit the floor/height hedonic model and adjust prices.
    Hedonic,
    /// Variance components by height.
    Variances,
    /// Fit the frontier.
    Frontier {
        #[arg(long, value_enum, default_value = "constrained")]
        mode: Mode,
    },
    /// Parametric bootstrap bands around a fitted frontier.
    Bootstrap {
        #[arg(long, value_enum, default_value = "constrained")]
        mode: Mode,
        #[arg(long)]
        replicates: Option<usize>,
    },
    /// Expected regulatory tax rate per building.
    Tax {
        #[arg(long, value_enum, default_value = "constrained")]
        mode: Mode,
    },
    /// Lower bounds on the tax from neighbouring buildings.
    Bounds {
        #[arg(long, value_enum, default_value = "constrained")]
        mode: Mode,
    },
    /// Elasticity of substitution and the unit isoquant from the quartic fit.
    Elasticity,
    /// Rebuild a height band at a single height.
    Counterfactual {
        #[arg(long)]
        band_lo: u32,
        #[arg(long)]
        band_hi: u32,
        #[arg(long)]
        target: u32,
    },
    /// Synthetic sales, resales, a flat CPI and simulated markets.
    Simulate {
        /// Number of markets (overrides the configuration).
        #[arg(long)]
        markets: Option<usize>,
        /// Skip the synthetic sales.
        #[arg(long)]
        no_panel: bool,
    },
    /// Index of the artifacts behind each summary view.
    Report,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Ingest => "ingest",
            Command::Hedonic => "hedonic",
            Command::Variances => "variances",
            Command::Frontier { .. } => "frontier",
            Command::Bootstrap { .. } => "bootstrap",
            Command::Tax { .. } => "tax",
            Command::Bounds { .. } => "bounds",
            Command::Elasticity => "elasticity",
            Command::Counterfactual { .. } => "counterfactual",
            Command::Simulate { .. } => "simulate",
            Command::Report => "report",
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Internal(e.to_string()))?;
    }
    let config = PipelineConfig::load(cli.config.as_deref(), cli.seed)?;
    let ws = Workspace::new(&cli.out, config.hash(), cli.command.name())?;
    let cx = Context {
        config,
        ws,
        out: cli.out,
    };
    match cli.command {
        Command::Ingest => commands::ingest(&cx),
        Command::Hedonic => commands::hedonic(&cx),
        Command::Variances => commands::variances(&cx),
        Command::Frontier { mode } => commands::frontier(&cx, mode.into()),
        Command::Bootstrap { mode, replicates } => commands::bootstrap(&cx, mode.into(), replicates),
        Command::Tax { mode } => commands::tax(&cx, mode.into()),
        Command::Bounds { mode } => commands::bounds(&cx, mode.into()),
        Command::Elasticity => commands::elasticity(&cx),
        Command::Counterfactual {
            band_lo,
            band_hi,
            target,
        } => commands::counterfactual(&cx, band_lo, band_hi, target),
        Command::Simulate { markets, no_panel } => commands::simulate(&cx, markets, !no_panel),
        Command::Report => commands::report(&cx),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
