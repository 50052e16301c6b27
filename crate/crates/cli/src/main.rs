//! `febarrier`: free-energy-barrier certificates, Davies generators and
//! mixing-time bounds for stabilizer Hamiltonians.

mod commands;
mod config;
mod error;

use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use config::CommonArgs;

#[derive(Debug, Parser)]
#[command(name = "febarrier", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Syndrome energies and Gibbs weights.
    Spectrum {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Step barrier of one step, or the bottleneck path of one or all targets.
    Barrier {
        #[command(flatten)]
        common: CommonArgs,
        /// Target Pauli such as XXI.
        #[arg(long)]
        target: Option<String>,
        /// Partial product `U` for a single step barrier.
        #[arg(long)]
        step: Option<String>,
    },
    /// Free-energy certificate of a flow file, or verification of a certificate.
    FlowEnergy {
        #[command(flatten)]
        common: CommonArgs,
        /// Certificate to re-check instead of computing a new one.
        #[arg(long)]
        verify: Option<std::path::PathBuf>,
    },
    /// Flows for every target from the bottleneck search or the ensemble generator.
    FlowSearch {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_enum, default_value_t = SearchMode::Bottleneck)]
        mode: SearchMode,
    },
    /// Dense Davies generator at small n.
    Davies {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(value_enum)]
        action: DaviesAction,
        /// Initial state for `evolve`: a computational basis bitstring or `plus`.
        #[arg(long, default_value = "plus")]
        initial: String,
        /// Time grid size for `evolve`.
        #[arg(long, default_value_t = 100)]
        points: usize,
    },
    /// Support-number and mixing-time bound from flows.
    Bound {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Kinetic Monte Carlo of the syndrome dynamics.
    Kmc {
        #[command(flatten)]
        common: CommonArgs,
        /// Initial error for the trajectory dump; identity when absent.
        #[arg(long)]
        initial: Option<String>,
        /// Time grid size of the relaxation fit.
        #[arg(long, default_value_t = 40)]
        grid: usize,
    },
    /// Layered-flow free-energy bound. Parameters accept comma-separated
    /// lists for a sweep and may be given as `key=value` words.
    LayerBound {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        a: Option<String>,
        #[arg(long)]
        m: Option<String>,
        #[arg(long)]
        l: Option<String>,
        /// `a=`, `m=`, `l=` and `beta=` assignments.
        params: Vec<String>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SearchMode {
    Bottleneck,
    Ensemble,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DaviesAction {
    Build,
    Gap,
    VerifyFactorization,
    Evolve,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Spectrum { common } => commands::spectrum(&common),
        Command::Barrier { common, target, step } => commands::barrier(&common, target.as_deref(), step.as_deref()),
        Command::FlowEnergy { common, verify } => commands::flow_energy(&common, verify.as_deref()),
        Command::FlowSearch { common, mode } => commands::flow_search(&common, mode),
        Command::Davies {
            common,
            action,
            initial,
            points,
        } => commands::davies(&common, action, &initial, points),
        Command::Bound { common } => commands::bound(&common),
        Command::Kmc { common, initial, grid } => commands::kmc(&common, initial.as_deref(), grid),
        Command::LayerBound {
            common,
            a,
            m,
            l,
            params,
        } => commands::layer_bound(&common, a.as_deref(), m.as_deref(), l.as_deref(), &params),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => e.report(),
    }
}
