use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use dissipwave_cli::{exit, load_config, output, run, Subcommand};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Command {
    /// Symbol against the mode ODE and across the branch point
    VerifySymbols,
    /// Decay of the band-restricted Green functions
    GreenBands,
    /// Run the solver and record the requested norms
    Simulate,
    /// Fit decay rates against their theoretical exponents
    DecayReport,
    /// Per-step energy ledger and a priori bounds
    EnergyAudit,
}

impl From<Command> for Subcommand {
    fn from(c: Command) -> Self {
        match c {
            Command::VerifySymbols => Subcommand::VerifySymbols,
            Command::GreenBands => Subcommand::GreenBands,
            Command::Simulate => Subcommand::Simulate,
            Command::DecayReport => Subcommand::DecayReport,
            Command::EnergyAudit => Subcommand::EnergyAudit,
        }
    }
}

/// Spectral experiments for the damped wave equation u_tt - Lap u + u_t = -|u|^theta u.
#[derive(Debug, Parser)]
#[command(name = "dissipwave", version)]
struct Args {
    #[arg(value_enum)]
    command: Command,

    /// Config file, or the name of a built-in preset
    #[arg(long)]
    config: PathBuf,

    /// Override a config value (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit::CONFIG as u8 } else { 0 });
        }
    };
    let result = load_config(&args.config, &args.overrides)
        .and_then(|config| run(args.command.into(), &config, &output::output_root()));
    match result {
        Ok(outcome) => {
            print!("{}", outcome.summary);
            ExitCode::from(outcome.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("dissipwave: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
