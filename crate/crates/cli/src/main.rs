use std::process::ExitCode;

use clap::Parser;
use l1dom_cli::{run, Cli};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("L1DOM_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let line = e.to_string().replace('\n', " ");
            eprintln!("l1dom: error: {line}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
