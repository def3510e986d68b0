use clap::Parser;

use skinsep::cli::{error_line, run, Cli};

fn main() {
    match run(Cli::parse()) {
        Ok(lines) => lines.iter().for_each(|l| println!("{l}")),
        Err(e) => {
            eprintln!("{}", error_line(&e));
            std::process::exit(e.exit_code());
        }
    }
}
