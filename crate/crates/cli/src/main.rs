use std::process::ExitCode;

use clap::Parser;
use rollkit_cli::{configure_threads, run, Cli, THREADS_ENV};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let threads = std::env::var(THREADS_ENV).ok();
    let result = configure_threads(threads.as_deref()).and_then(|_| run(&cli));
    match result {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("rollkit: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
