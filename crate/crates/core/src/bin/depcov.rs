use std::io::{self, Write};
use std::process::ExitCode;

use clap::Parser;
use depcov::cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut out = io::stdout();
    match run(&cli, &mut out) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let _ = out.flush();
            eprintln!("{}", e.to_json());
            ExitCode::from(1)
        }
    }
}
