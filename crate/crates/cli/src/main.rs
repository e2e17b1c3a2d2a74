use clap::Parser;
use nonlocal_meter_cli::{execute, Cli, CliError};
use std::process::ExitCode;

const THREADS_VAR: &str = "NONLOCAL_METER_THREADS";

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_VAR) else { return Ok(()) };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("{THREADS_VAR} must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::Config(e.to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = configure_threads().and_then(|_| cli.resolve()).and_then(|cfg| {
        let json = execute(&cfg)?;
        if cfg.out.is_none() {
            print!("{json}");
        }
        Ok(())
    });
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("nonlocal-meter: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
