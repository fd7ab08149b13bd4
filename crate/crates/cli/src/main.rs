use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use epinet_cli::{load_experiment, run_command, Command};

/// Epidemic network investment games.
#[derive(Debug, Parser)]
#[command(name = "epinet", version)]
struct Args {
    command: Command,
    /// TOML experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Overrides `options.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `options.out`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Reject unknown config keys.
    #[arg(long)]
    strict: bool,
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    let result = load_experiment(&args.config, args.strict, args.seed).and_then(|exp| {
        let out = args.out.clone().unwrap_or_else(|| exp.out.clone());
        run_command(&exp, args.command, &out)
    });
    match result {
        Ok(o) => {
            if let Some(err) = &o.report.error {
                eprintln!("error: {err}");
            }
            for f in &o.files {
                println!("{}", f.display());
            }
            ExitCode::from(o.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
