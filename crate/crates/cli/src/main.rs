//! `duel`: payoff queries, equilibrium checks, sweeps and Monte Carlo runs
//! for the two-player discounted duel.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod error;
mod output;

use output::Format;

#[derive(Debug, Parser)]
#[command(name = "duel", version, about = "Discounted static duel: payoffs, equilibria, sweeps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Expected payoff of a profile from the exact solver and, when one
    /// exists, the family closed form.
    Payoff {
        #[command(flatten)]
        params: GameArgs,
        #[command(flatten)]
        profile: ProfileArgs,
        /// Evaluate in exact rational arithmetic.
        #[arg(long)]
        exact: bool,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Seeded Monte Carlo estimate of a profile's payoff.
    Simulate {
        #[command(flatten)]
        params: GameArgs,
        #[command(flatten)]
        profile: ProfileArgs,
        #[arg(long, default_value_t = 100_000)]
        episodes: u64,
        #[arg(long, default_value_t = duel_core::checks::SEED)]
        seed: u64,
        /// Round cap per episode. Defaults to where the discounted tail
        /// drops below 1e-12.
        #[arg(long)]
        max_rounds: Option<u64>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Certify a profile as an ε-equilibrium or report a profitable deviation.
    CheckNe {
        #[command(flatten)]
        params: GameArgs,
        #[command(flatten)]
        profile: ProfileArgs,
        #[arg(long, default_value_t = 1e-9)]
        epsilon: f64,
        /// Also report the on-path payoffs in exact rational arithmetic.
        #[arg(long)]
        exact: bool,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Unilateral gains over a uniform grid of stationary profiles.
    ScanStationary {
        #[command(flatten)]
        params: GameArgs,
        /// Points per axis, endpoints included.
        #[arg(long, default_value_t = 101)]
        grid: usize,
        #[arg(long, default_value_t = 1e-9)]
        epsilon: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Discount threshold above which skipping a shot against grim-DC(K)
    /// pays, per K.
    Gamma0 {
        #[arg(long)]
        p1: String,
        #[arg(long)]
        p2: String,
        /// A single K, an inclusive range `a..b`, or a comma list.
        #[arg(long, default_value = "1..8")]
        k: String,
        /// Bisection tolerance on γ.
        #[arg(long, default_value_t = 1e-6)]
        tolerance: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Scan the parameter box around the periodic-equilibrium center.
    #[command(name = "prop5-region")]
    PeriodicRegion {
        /// A single M, an inclusive range `a..b`, or a comma list.
        #[arg(long, default_value = "1..12")]
        m: String,
        /// Lattice steps per half-axis; the cube has (2·grid+1)³ points.
        #[arg(long, default_value_t = 4)]
        grid: usize,
        #[arg(long, default_value_t = 0.02)]
        half_width: f64,
        #[arg(long, default_value_t = 1e-9)]
        epsilon: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Run every acceptance criterion and print one line per criterion.
    VerifyAll {
        /// JSON report with one record per criterion.
        #[arg(long, alias = "out")]
        report: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct GameArgs {
    /// Discount factor in (0, 1). Decimals and fractions (`2/3`) accepted.
    #[arg(long)]
    gamma: String,
    #[arg(long)]
    p1: String,
    #[arg(long)]
    p2: String,
}

#[derive(Debug, Args)]
struct ProfileArgs {
    /// Two strategies separated by a comma, e.g. `grim-CD:2,grim-CD:2`.
    #[arg(long)]
    profile: String,
}

#[derive(Debug, Args)]
struct OutputArgs {
    /// Defaults to json for single queries and csv for sweeps.
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Output file. Standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
