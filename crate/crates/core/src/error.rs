use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix must be square with n >= 2, got {rows}x{cols}")]
    Shape { rows: usize, cols: usize },
    #[error("matrix is asymmetric at ({i},{j}): {a} vs {b}")]
    Asymmetric { i: usize, j: usize, a: f64, b: f64 },
    #[error("negative entry {value} at ({i},{j})")]
    Negative { i: usize, j: usize, value: f64 },
    #[error("nonzero diagonal entry {value} at {i}")]
    Diagonal { i: usize, value: f64 },
    #[error("non-finite entry at ({i},{j})")]
    NonFinite { i: usize, j: usize },
    #[error("investment exceeds the network weight at ({i},{j}) by {excess}")]
    Infeasible { i: usize, j: usize, excess: f64 },
    #[error("agent {agent} invests on link ({k},{l}) outside its own links")]
    NotLocal { agent: usize, k: usize, l: usize },
    #[error("invalid parameter: {0}")]
    Param(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("no eligible agent for link ({k},{l}) carrying investment")]
    NoEligible { k: usize, l: usize },
    #[error("state space too large: n = {0} exceeds 12")]
    TooLarge(usize),
    #[error("step size underflow at t = {0}")]
    StepUnderflow(f64),
    #[error("iteration did not converge: {0}")]
    NoConvergence(String),
    #[error("hypothesis not met: {0}")]
    Hypothesis(String),
    #[error("network parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;
