use std::process::ExitCode;

use clap::Parser;
use onebit_cli::{run_sweep, Args, SweepSpec};

fn main() -> ExitCode {
    let args = Args::parse();
    let spec = match SweepSpec::try_from(args) {
        Ok(spec) => spec,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match run_sweep(&spec) {
        Ok(summary) => {
            print!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
