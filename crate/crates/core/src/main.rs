use clap::Parser;

use risklab::cli::{self, CliArgs};
use risklab::error::Error;

fn main() {
    let args = CliArgs::parse();
    let code = match cli::run(&args) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            match err {
                // usage and configuration problems exit 1; assertion
                // failures are reported by run() itself with exit 2
                Error::Usage(_) | Error::Config(_) => 1,
                _ => 1,
            }
        }
    };
    std::process::exit(code);
}
