use std::process::ExitCode;

use clap::Parser;
use wpsim_cli::args::{CampaignArgs, Cli, Command};
use wpsim_cli::RunError;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (args, execute) = match &cli.command {
        Command::Run(a) => (a, true),
        Command::Validate(a) => (a, false),
    };
    let config = match args.resolve() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let diags = config.validate();
    if !diags.is_empty() {
        for d in &diags {
            eprintln!("error: {d}");
        }
        return ExitCode::from(2);
    }
    if !execute {
        println!("ok: {} configuration is valid", config.kind());
        return ExitCode::SUCCESS;
    }
    let out = CampaignArgs::out_dir(&config);
    match wpsim_cli::run(&config, &out) {
        Ok(summary) => {
            for f in &summary.manifest.files {
                println!("{}", out.join(&f.name).display());
            }
            println!("{}", out.join("manifest.json").display());
            ExitCode::SUCCESS
        }
        Err(e @ (RunError::Invalid(_) | RunError::FullScale { .. })) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
