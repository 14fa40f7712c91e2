mod commands;
mod config;
mod error;
mod table;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::{Mode, RunArgs, RunConfig};
use crate::error::CliError;

/// Algorithmic cooling of near-equivalent spin pairs: protocol runs,
/// parameter sweeps and pulse-level checks, written as CSV.
#[derive(Parser, Debug)]
#[command(name = "spin-cool", version)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,
    #[command(flatten)]
    args: RunArgs,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Singlet order and signal after 0..=n_p permutations.
    Pump,
    /// Signal against the triplet reset delay τ.
    SweepTau,
    /// Signal against the evolution delay, with a mono-exponential fit.
    Decay,
    /// Zeeman-order enhancement after pumping, reset and swap.
    Enhance,
    /// AB spectrum, pulse-level permutations and composite-pulse robustness.
    CoherentCheck,
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = RunConfig::resolve(&cli.args)?;
    let command = cli.command.unwrap_or(match cfg.mode {
        Mode::CoherentCheck => Command::CoherentCheck,
        _ => Command::Pump,
    });
    log::debug!("{command:?} with {cfg:?}");
    let out = cfg.out_path();
    match command {
        Command::Pump => commands::pump(&cfg)?.emit(out),
        Command::SweepTau => commands::sweep(&cfg)?.emit(out),
        Command::Enhance => commands::enhance(&cfg)?.emit(out),
        Command::Decay => {
            let (table, failure) = commands::decay(&cfg)?;
            table.emit(out)?;
            failure.map_or(Ok(()), Err)
        }
        Command::CoherentCheck => {
            let files = commands::coherent_check(&cfg)?;
            if let Some((first, _)) = files.first() {
                if let Some(dir) = first.parent() {
                    commands::ensure_dir(dir)?;
                }
            }
            for (path, table) in &files {
                table.emit(Some(path))?;
                log::info!("wrote {}", path.display());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("spin-cool: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
