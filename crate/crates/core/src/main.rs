use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use divprop::cli::{exit_code, run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) => {
            eprint!("{}", out.summary);
            if cli.config.out.is_none() {
                let mut stdout = std::io::stdout().lock();
                let _ = stdout.write_all(out.body.as_bytes());
            }
            ExitCode::from(out.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
