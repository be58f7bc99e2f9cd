use std::fmt;

use thiserror::Error;

/// A single failed check, with a path to the offending item
/// (for example `influence.column[2]` or `nodes[0].probs`).
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl Violation {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

fn join(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(Violation::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    /// Every invariant violation found, not just the first.
    #[error("validation failed: {}", join(.0))]
    Invalid(Vec<Violation>),

    #[error("node {node} is out of range for a {node_count}-node network")]
    NodeOutOfRange { node: usize, node_count: usize },

    #[error("node {node} is already compromised in state {state}")]
    NodeCompromised { node: usize, state: String },

    #[error("{node_count} nodes exceeds the state-space cap of {cap} nodes")]
    Capacity { node_count: usize, cap: usize },

    #[error("matrix game has non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("matrix game must have at least one row and one column")]
    EmptyMatrix,

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NotConverged {
        iterations: usize,
        residual: f64,
        last_values: Vec<f64>,
    },

    #[error("strategy mismatch at state {state}: {message}")]
    StrategyMismatch { state: String, message: String },

    #[error("linear system for policy evaluation is singular")]
    SingularSystem,

    #[error("episode from state {start} exceeded the {cap}-step cap")]
    EpisodeCap { start: String, cap: usize },

    #[error("simplex failed: {0}")]
    Simplex(&'static str),
}

impl Error {
    pub fn invalid(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Invalid(vec![Violation::new(path, message)])
    }
}

pub type Result<T> = std::result::Result<T, Error>;
