use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use lawson_lab::config::Overrides;
use lawson_lab::{init_threads, run, CliError, Subcommand};

/// Minimal hypersurfaces near Lawson cones and Allen-Cahn layer diagnostics.
#[derive(Debug, Parser)]
#[command(name = "lawson-lab", version)]
struct Cli {
    #[arg(value_enum)]
    subcommand: Subcommand,
    #[command(flatten)]
    overrides: Overrides,
}

fn execute(cli: Cli) -> Result<(), CliError> {
    init_threads()?;
    let config = cli.overrides.resolve()?;
    let summary = run(cli.subcommand, &config)?;
    println!(
        "{}",
        serde_json::to_string_pretty(&summary).expect("summary serializes")
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(CliError::Usage(String::new()).exit_code() as u8);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
