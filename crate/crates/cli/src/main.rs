use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use randlab_cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = Instant::now();
    let result = run(&cli.command);
    eprintln!("wall time: {:.3}s", started.elapsed().as_secs_f64());
    match result {
        Ok(outcome) => {
            for a in outcome.manifest.assertions.iter().filter(|a| !a.passed) {
                eprintln!("assertion failed: {} ({})", a.name, a.detail);
            }
            if outcome.success() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
