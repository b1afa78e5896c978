use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use eesim_cli::{run, CliError, RunConfig};

#[derive(Parser)]
#[command(name = "eesim", version, about = "Embedded-eigenstate photon trapping simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the spectrum of a configured system and write spectrum.csv.
    Spectrum { config: PathBuf },
    /// Run the configured experiment.
    Run {
        config: PathBuf,
        /// Resolve the config and write the manifest without simulating.
        #[arg(long)]
        dry_run: bool,
    },
    /// Check the engines against independent dense-basis calculations.
    Verify {
        #[arg(long, hide = true)]
        corrupt_negative_control: bool,
    },
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Spectrum { config } => {
            let cfg = RunConfig::load(&config)?;
            print!("{}", run::spectrum(&cfg)?);
        }
        Command::Run { config, dry_run } => {
            let cfg = RunConfig::load(&config)?;
            let m = run::run(&cfg, dry_run)?;
            println!("{} -> {}", m.experiment, cfg.output.directory.join(run::MANIFEST_FILE).display());
            for (k, v) in &m.results {
                match v {
                    Some(v) => println!("  {k:<28} {v:.6e}"),
                    None => println!("  {k:<28} nan"),
                }
            }
        }
        Command::Verify { corrupt_negative_control } => {
            let checks = eesim_core::verify::run_oracles(corrupt_negative_control)?;
            let mut failed = 0;
            for c in &checks {
                println!("{c}");
                failed += usize::from(!c.passed);
            }
            if failed > 0 {
                return Err(CliError::Verification { failed });
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
