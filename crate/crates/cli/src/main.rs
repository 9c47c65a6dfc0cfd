use std::path::PathBuf;
use std::process::ExitCode;

use chaintrunc_cli::{execute, Command, Overrides, RunConfig};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "chaintrunc",
    version,
    about = "Oscillator-chain bath mapping and truncation bounds"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Chain coefficients with equivalence diagnostics in <out>.diag.csv
    BuildChain(Common),
    /// Full, truncated and Volterra-reconstructed system trajectories
    Simulate(Common),
    /// Memory kernel table
    Kernels(Common),
    /// Empirical truncation error against both bounds
    Bound(Common),
    /// Minimal chain length over the (t, tol) grid
    MinModes(Common),
    /// Bound reports over the sweep axes, timings in <out>.timings.csv
    Sweep(Common),
}

#[derive(Args)]
struct Common {
    /// JSON run configuration
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Number of time-grid samples
    #[arg(long)]
    samples: Option<usize>,
    /// End of the time grid
    #[arg(long)]
    tmax: Option<f64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, common) = match cli.command {
        Cmd::BuildChain(c) => (Command::BuildChain, c),
        Cmd::Simulate(c) => (Command::Simulate, c),
        Cmd::Kernels(c) => (Command::Kernels, c),
        Cmd::Bound(c) => (Command::Bound, c),
        Cmd::MinModes(c) => (Command::MinModes, c),
        Cmd::Sweep(c) => (Command::Sweep, c),
    };
    let overrides = Overrides {
        seed: common.seed,
        out: common.out,
        samples: common.samples,
        t_max: common.tmax,
    };
    let result = RunConfig::load(&common.config).and_then(|mut cfg| {
        cfg.apply(&overrides);
        execute(command, &cfg)
    });
    match result {
        Ok(summary) => {
            for line in summary {
                println!("{line}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
