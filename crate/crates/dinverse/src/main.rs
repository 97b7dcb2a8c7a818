use clap::Parser;

use dinverse::cli::{exit_code_for, run, Cli};
use dinverse::error::Error;

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            eprintln!("error: {err}");
            if let Error::Classification { profile, .. } = &err {
                // Attach the profile so the caller can see which scales
                // failed to resolve.
                if let Ok(json) = serde_json::to_string(profile) {
                    eprintln!("profile: {json}");
                }
            }
            std::process::exit(exit_code_for(&err));
        }
    }
}
