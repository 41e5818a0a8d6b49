use std::process::ExitCode;

use clap::Parser;
use jobnet_cli::error::ExitKind;

fn main() -> ExitCode {
    let cli = jobnet_cli::Cli::parse();
    match std::panic::catch_unwind(|| jobnet_cli::run(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(e.kind.code() as u8)
        }
        // the panic message has already been printed by the hook
        Err(_) => ExitCode::from(ExitKind::Internal.code() as u8),
    }
}
