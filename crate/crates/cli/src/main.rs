use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use spectra_lab::{run, Command, RunOptions};

#[derive(Parser)]
#[command(name = "spectra-lab", version, about = "Spectral-function expansions for periodic and quasi-periodic potentials")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(clap::Args)]
struct Args {
    /// JSON run configuration
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides output.dir)
    #[arg(long)]
    out: Option<PathBuf>,
    /// RNG seed (overrides the config seed)
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Classify sampled frequencies into resonance zones
    Zones(Args),
    /// Build the gauge transform and its norm ladder
    Gauge(Args),
    /// Tabulate heat-invariant coefficients
    Heat(Args),
    /// Evaluate the plane-wave spectral function
    Bloch(Args),
    /// Residual ladders of oracle against expansion
    Compare(Args),
    /// Run the property suite
    Validate(Args),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cmd, args) = match cli.cmd {
        Cmd::Zones(a) => (Command::Zones, a),
        Cmd::Gauge(a) => (Command::Gauge, a),
        Cmd::Heat(a) => (Command::Heat, a),
        Cmd::Bloch(a) => (Command::Bloch, a),
        Cmd::Compare(a) => (Command::Compare, a),
        Cmd::Validate(a) => (Command::Validate, a),
    };
    let outcome = run(cmd, &args.config, &RunOptions { out: args.out, seed: args.seed });
    if outcome.exit_code == spectra_lab::EXIT_OK {
        println!("{}", outcome.summary);
    } else {
        eprintln!("{}", outcome.summary);
    }
    for f in &outcome.files {
        println!("wrote {}", f.display());
    }
    ExitCode::from(outcome.exit_code as u8)
}
