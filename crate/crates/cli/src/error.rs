use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] epinet::Error),
    #[error("output: {0}")]
    Io(String),
}

impl CliError {
    /// 2 for solver failures, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Model(e) if is_solver_failure(e) => 2,
            _ => 1,
        }
    }
}

pub fn is_solver_failure(e: &epinet::Error) -> bool {
    matches!(e, epinet::Error::NoConvergence(_) | epinet::Error::StepUnderflow(_))
}
