use std::process::ExitCode;

use clap::Parser;
use fsbc_cli::{execute, exit, init_threads, Cli};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit::USAGE } else { exit::OK });
        }
    };
    let code = init_threads().and_then(|()| execute(&cli)).unwrap_or_else(|e| {
        log::error!("{e}");
        e.exit_code()
    });
    ExitCode::from(code)
}
