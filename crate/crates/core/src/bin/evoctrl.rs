use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use evoctrl::cli::{execute, Command, EXIT_CONFIG};

/// Run an optimal-control experiment from a TOML config.
#[derive(Parser)]
#[command(version)]
struct Args {
    /// simulate | synthesize | verify | convolve-probe | dp-check | oracle
    command: String,
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG as u8 } else { 0 });
        }
    };
    let code = match args.command.parse::<Command>() {
        Ok(cmd) => execute(cmd, &args.config, args.seed, args.out.as_deref()),
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_CONFIG
        }
    };
    ExitCode::from(code as u8)
}
