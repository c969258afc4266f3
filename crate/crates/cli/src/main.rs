use std::process::ExitCode;

use clap::Parser;
use topowalk_cli::args::Cli;
use topowalk_cli::run_command;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = cli
        .action
        .resolve()
        .and_then(|inv| run_command(inv.command, &inv.params, &inv.out));
    match result {
        Ok(manifest) => {
            for path in &manifest.outputs {
                println!("{}", path.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
