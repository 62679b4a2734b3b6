use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hflow::config::{Mode, RunConfig};
use hflow::runner::{self, RunError};

#[derive(Parser)]
#[command(name = "hflow", about = "H^alpha-flow solver and verification harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Flat key=value configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory for datasets and reports.
    #[arg(long)]
    out: PathBuf,
    /// Repeat the run at h, h/2, ..., h/2^k and emit the convergence table.
    #[arg(long, default_value_t = 0)]
    resolution_sweep: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one auxiliary problem and store the trajectory.
    SolveAux(RunArgs),
    /// Run the exhaustion cascade and its convergence report.
    Cascade(RunArgs),
    /// Re-derive all checks from a stored trajectory directory.
    Verify(RunArgs),
    /// Marker-particle curve lab against closed-form oracles.
    Curve(RunArgs),
    /// Closed-form cross-checks of the numerical kernels.
    OracleCompare(RunArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (mode, args) = match &cli.command {
        Command::SolveAux(a) => (Mode::SolveAux, a),
        Command::Cascade(a) => (Mode::Cascade, a),
        Command::Verify(a) => (Mode::Verify, a),
        Command::Curve(a) => (Mode::Curve, a),
        Command::OracleCompare(a) => (Mode::OracleCompare, a),
    };
    let cfg = match RunConfig::load(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(2);
        }
    };
    match runner::run(&cfg, mode, &args.out, args.resolution_sweep) {
        Ok(true) => {
            println!("all checks passed; artifacts in {}", args.out.display());
            ExitCode::SUCCESS
        }
        Ok(false) => {
            eprintln!("checks failed; see {}", args.out.join("reports.txt").display());
            ExitCode::from(1)
        }
        Err(RunError::Config(e)) => {
            eprintln!("{e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(1)
        }
    }
}
