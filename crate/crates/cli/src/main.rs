use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod config;
mod run;

/// Numerical lab for gradient concentration between partially flat
/// insulating inclusions.
#[derive(Parser)]
#[command(name = "necklab", version)]
struct Cli {
    /// Output directory; takes precedence over NECKLAB_OUT and the
    /// document's output_dir.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for sweeps (default: available parallelism).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one mode problem; writes field.csv, gradient.csv and summary.json.
    Solve {
        config: PathBuf,
        /// Also write binary snapshots (field.bin, gradient.bin).
        #[arg(long)]
        binary: bool,
    },
    /// Run the epsilon list; writes sweep.csv, summary.json and fit.json.
    Sweep { config: PathBuf },
    /// Homogeneous radial solution and integrating factor; writes ode.csv and ode.json.
    Ode { config: PathBuf },
    /// Run the invariant suite and print a pass/fail table.
    Verify {
        #[arg(long, hide = true)]
        inject_drift_sign_error: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out = cli.out.as_deref();
    let res = match &cli.command {
        Command::Solve { config, binary } => run::solve(config, out, *binary),
        Command::Sweep { config } => run::sweep_cmd(config, out, cli.jobs),
        Command::Ode { config } => run::ode(config, out),
        Command::Verify {
            inject_drift_sign_error,
        } => run::verify(*inject_drift_sign_error),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.exit_code())
        }
    }
}
