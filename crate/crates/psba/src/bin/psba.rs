use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use psba::commands::{self, Command};
use psba::config::{parse_config_str, RunConfig};
use psba::protocol::PhysicsMode;

#[derive(Parser)]
#[command(
    name = "psba",
    about = "Simulator for a swapped-Bell-state signaling protocol: runs the \
             named experiment and writes its results table as CSV",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: CliCommand,
}

#[derive(clap::Args)]
struct CommonArgs {
    /// Path to the key=value config file
    #[arg(long)]
    config: PathBuf,
    /// Override the config file's seed
    #[arg(long)]
    seed: Option<u64>,
    /// Override the physics mode: paper | physical
    #[arg(long)]
    mode: Option<PhysicsMode>,
    /// Output CSV path (default: psba_<command>.csv)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum CliCommand {
    /// Four-case table of beam-splitter port proportions
    Matrix(CommonArgs),
    /// P(different ports) vs visibility for an equal-polarization pair
    HomSweep(CommonArgs),
    /// Send the configured message and decode it from Bob's statistics
    Send(CommonArgs),
    /// Compare Bob's statistics under the two encodings
    Nosignal(CommonArgs),
    /// Delayed-choice sorting into BSM- and SSM-conditioned correlations
    Sorted(CommonArgs),
    /// Block-length calibration and empirical bit error rate
    Calibrate(CommonArgs),
    /// Relay the message over a decode-and-forward chain
    Multihop(CommonArgs),
}

impl CliCommand {
    fn split(self) -> (Command, CommonArgs) {
        match self {
            CliCommand::Matrix(a) => (Command::Matrix, a),
            CliCommand::HomSweep(a) => (Command::HomSweep, a),
            CliCommand::Send(a) => (Command::Send, a),
            CliCommand::Nosignal(a) => (Command::Nosignal, a),
            CliCommand::Sorted(a) => (Command::Sorted, a),
            CliCommand::Calibrate(a) => (Command::Calibrate, a),
            CliCommand::Multihop(a) => (Command::Multihop, a),
        }
    }
}

fn run(command: Command, args: CommonArgs) -> Result<(), String> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| format!("reading {}: {e}", args.config.display()))?;
    let partial = parse_config_str(&text)
        .map_err(|e| format!("{}: {e}", args.config.display()))?
        .with_overrides(args.seed, args.mode);
    let config = RunConfig::build(partial).map_err(|e| e.to_string())?;

    let output = commands::run(command, &config).map_err(|e| e.to_string())?;

    let out_path = args
        .out
        .unwrap_or_else(|| PathBuf::from(command.default_out_name()));
    output
        .table
        .write_to(&out_path)
        .map_err(|e| format!("writing {}: {e}", out_path.display()))?;
    println!("{}", output.summary);
    println!("wrote {} rows to {}", output.table.n_rows(), out_path.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = cli.command.split();
    match run(command, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::FAILURE
        }
    }
}
