//! Command-line front end: `run`, `sweep`, `validate`, `arc`.

pub mod config;
pub mod output;
pub mod runner;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

pub use config::{validate_config, EngineKind, Measure, OutputFormat, RunConfig};
pub use runner::{run, sweep, EngineRun};

use crate::error::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_OTHER: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_CAPACITY: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::InvalidSpec(_) | Error::InvalidArgument(_) => EXIT_VALIDATION,
        Error::Capacity { .. } => EXIT_CAPACITY,
        Error::Numerical(_) => EXIT_NUMERICAL,
        _ => EXIT_OTHER,
    }
}

#[derive(Parser, Debug)]
#[command(name = "nuspin", version, about = "Collective neutrino spin dynamics and quantum-resource analysis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Evolve the configured system and write all tables.
    Run { config: PathBuf },
    /// Run the MPS engine once per bond cap and difference the results.
    Sweep { config: PathBuf },
    /// Check a configuration and print it with defaults filled in.
    Validate { config: PathBuf },
    /// Print the one-qubit (S, M2NL) constraint arc as CSV.
    Arc {
        #[arg(long, default_value_t = 512)]
        points: usize,
    },
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let raw = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(vec![format!("cannot read {}: {e}", path.display())]))?;
    validate_config(&raw)
}

pub fn execute(cmd: &Command) -> Result<()> {
    match cmd {
        Command::Run { config } => {
            let cfg = load_config(config)?;
            run(&cfg)?;
            println!("wrote {}", cfg.output_dir.display());
        }
        Command::Sweep { config } => {
            let cfg = load_config(config)?;
            sweep(&cfg)?;
            println!("wrote {}", cfg.output_dir.display());
        }
        Command::Validate { config } => {
            let cfg = load_config(config)?;
            cfg.check_capacity()?;
            print!("{}", cfg.to_toml());
        }
        Command::Arc { points } => print!("{}", output::arc_csv(*points)?),
    }
    Ok(())
}

/// Parses `args`, executes, and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
        }
    };
    match execute(&cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::Config(vec![])), 2);
        assert_eq!(
            exit_code(&Error::Capacity { what: "x", limit: 1, requested: 2 }),
            3
        );
        assert_eq!(exit_code(&Error::Numerical("x".into())), 4);
        assert_eq!(main_with_args(["nuspin", "arc", "--points", "1"]), 2);
        assert_eq!(main_with_args(["nuspin", "validate", "/nonexistent.toml"]), 2);
    }
}
