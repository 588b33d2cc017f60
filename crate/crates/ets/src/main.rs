use std::path::PathBuf;
use std::process;

use clap::{Parser, Subcommand};
use ets::{DriverError, ExitCode, RunConfig};

/// Hydrogen in strong laser fields with exterior time scaling.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Propagate the ground state through the configured pulse.
    Run { config: PathBuf },
    /// Random-vector scan of the Krylov dimension over l_max and dt.
    ScanKmax { config: PathBuf },
    /// Compute the field-free ground state and its density.
    GroundState { config: PathBuf },
    /// Continue a run from a checkpoint file.
    Resume { checkpoint: PathBuf },
}

fn init_threads() -> Result<(), DriverError> {
    if let Ok(v) = std::env::var("ETS_THREADS") {
        let n: usize = v.parse().map_err(|_| {
            DriverError::Config(format!("ETS_THREADS = {v:?} is not a thread count"))
        })?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| DriverError::Config(e.to_string()))?;
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<(), DriverError> {
    init_threads()?;
    match cli.command {
        Command::Run { config } => {
            let meta = ets::run(RunConfig::from_file(&config)?)?;
            println!(
                "{} steps to t = {:.3}, final norm {:.12}, K in [{}, {}]",
                meta.steps, meta.t_final, meta.final_norm, meta.k.min, meta.k.max
            );
        }
        Command::ScanKmax { config } => {
            for row in ets::scan(&RunConfig::from_file(&config)?)? {
                let k = row.k_max.map_or(">cap".to_string(), |k| k.to_string());
                println!("l_max = {:4}  dt = {:<8}  K_max = {k}", row.l_max, row.dt);
            }
        }
        Command::GroundState { config } => {
            let g = ets::ground(&RunConfig::from_file(&config)?)?;
            println!("E0 = {:.15} (residual {:.1e})", g.energy, g.residual);
        }
        Command::Resume { checkpoint } => {
            let meta = ets::resume(&checkpoint)?;
            println!(
                "resumed to t = {:.3}, final norm {:.12}",
                meta.t_final, meta.final_norm
            );
        }
    }
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = execute(cli) {
        eprintln!("error: {e}");
        let code = e.exit_code();
        process::exit(code as i32);
    }
    process::exit(ExitCode::Success as i32);
}
