//! Batch front end: config parsing, command dispatch and report emission.
//!
//! Exit codes: 0 on success, 1 on invalid input, 2 when a solver did not
//! converge (the report is still written).

pub mod config;
pub mod error;
pub mod report;

mod commands;

use std::path::{Path, PathBuf};

pub use config::{parse_config, Experiment, ExperimentConfig};
pub use error::CliError;
pub use report::{emit_report, Report, Status};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Simulate,
    Equilibrium,
    Optimum,
    Poa,
    Pok,
    Policy,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Equilibrium => "equilibrium",
            Command::Optimum => "optimum",
            Command::Poa => "poa",
            Command::Pok => "pok",
            Command::Policy => "policy",
        }
    }
}

#[derive(Debug)]
pub struct Outcome {
    pub exit_code: i32,
    pub report: Report,
    pub files: Vec<PathBuf>,
}

/// Builds the report of `command` without writing anything.
pub fn build_report(exp: &Experiment, command: Command) -> Result<(Report, Vec<(String, String)>), CliError> {
    let out = match command {
        Command::Simulate => commands::simulate(exp),
        Command::Equilibrium => commands::equilibrium(exp),
        Command::Optimum => commands::optimum(exp),
        Command::Poa => commands::poa(exp),
        Command::Pok => commands::pok(exp),
        Command::Policy => commands::policy(exp),
    };
    let (status, error, result, tables) = match out {
        Ok(o) if o.converged => (Status::Ok, None, o.result, o.tables),
        Ok(o) => (Status::NoConvergence, Some("solver did not converge".to_string()), o.result, o.tables),
        Err(CliError::Model(e)) if error::is_solver_failure(&e) => {
            (Status::NoConvergence, Some(e.to_string()), serde_json::Value::Null, Vec::new())
        }
        Err(e) => return Err(e),
    };
    let report = Report {
        command: command.name().into(),
        status,
        error,
        config: exp.config.clone(),
        result,
        tables: tables.iter().map(|(n, _)| n.clone()).collect(),
    };
    Ok((report, tables))
}

/// Runs `command` and writes its report and tables into `out`.
pub fn run_command(exp: &Experiment, command: Command, out: &Path) -> Result<Outcome, CliError> {
    let (report, tables) = build_report(exp, command)?;
    let files = emit_report(&report, &tables, out)?;
    let exit_code = match report.status {
        Status::Ok => 0,
        Status::NoConvergence => 2,
    };
    Ok(Outcome { exit_code, report, files })
}

/// Reads a config file; relative paths inside it are resolved against its
/// directory. `seed` overrides `options.seed`.
pub fn load_experiment(path: &Path, strict: bool, seed: Option<u64>) -> Result<Experiment, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut exp = parse_config(&text, base, strict)?;
    if seed.is_some() {
        exp.config.options.seed = seed;
    }
    Ok(exp)
}
