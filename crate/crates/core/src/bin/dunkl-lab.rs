use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

/// Numerical laboratory for rational Dunkl analysis.
#[derive(Parser)]
#[command(name = "dunkl-lab", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the checks listed in a JSON config. Exit 0: all pass, 2: a check
    /// failed, 1: config or accuracy error. DUNKL_LAB_OUTPUT_DIR overrides
    /// the output directory.
    Run { config: PathBuf },
    /// Print every check kind with the statement it tests and its parameters.
    ListChecks,
    /// Print the version.
    Version,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut out = std::io::stdout().lock();
    let mut err = std::io::stderr().lock();
    let code = match cli.command {
        Command::Run { config } => dunkl_lab::runner::run(&config, &mut out, &mut err),
        Command::ListChecks => {
            dunkl_lab::runner::list_checks(&mut out);
            0
        }
        Command::Version => {
            let _ = writeln!(out, "dunkl-lab {}", dunkl_lab::VERSION);
            0
        }
    };
    ExitCode::from(code as u8)
}
