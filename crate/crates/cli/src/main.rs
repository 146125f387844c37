use std::process::ExitCode;

use clap::Parser;
use safefirst_cli::{run, Cli};

fn init_logging() {
    let level = std::env::var("SAFEFIRST_LOG").unwrap_or_else(|_| "warn".into());
    let filter = match level.trim().to_ascii_lowercase().as_str() {
        "off" => log::LevelFilter::Off,
        "info" => log::LevelFilter::Info,
        "debug" => log::LevelFilter::Debug,
        _ => log::LevelFilter::Warn,
    };
    env_logger::Builder::new()
        .filter_level(filter)
        .format_timestamp(None)
        .init();
}

fn main() -> ExitCode {
    init_logging();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
