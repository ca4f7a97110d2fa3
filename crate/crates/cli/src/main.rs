mod args;
mod run;

use clap::error::ErrorKind;
use clap::Parser;
use implied_weights::ErrorClass;

use args::Cli;
use run::Failure;

fn main() {
    let code = match Cli::try_parse() {
        Ok(cli) => match run::run(&cli) {
            Ok(()) => 0,
            Err(f) => {
                eprintln!("{}", f.line());
                f.class.exit_code()
            }
        },
        Err(e) => match e.kind() {
            ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                print!("{e}");
                0
            }
            _ => {
                let text = e.to_string();
                let first = text.lines().next().unwrap_or("").trim_start_matches("error: ");
                let f = Failure {
                    code: "usage".into(),
                    class: ErrorClass::Config,
                    message: first.to_string(),
                };
                eprintln!("{}", f.line());
                f.class.exit_code()
            }
        },
    };
    std::process::exit(code);
}
