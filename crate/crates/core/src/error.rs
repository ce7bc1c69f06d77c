use thiserror::Error;

use crate::observation::Violation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid world: {0}")]
    InvalidWorld(String),

    #[error("invalid view: {0}")]
    InvalidView(String),

    #[error("invalid object spec: {0}")]
    InvalidObject(String),

    #[error("no object hypothesis fits the world")]
    NoHypothesis,

    #[error("hypothesis list is empty")]
    EmptyHypotheses,

    #[error("invalid probability mass: {0}")]
    InvalidMass(String),

    #[error("observation has zero probability under the current belief")]
    ImpossibleObservation,

    #[error("observation model rejected: {}", format_violations(.0))]
    InvalidObservationModel(Vec<Violation>),

    #[error("observation centers are empty")]
    EmptyCenters,

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("search budget exceeded: {nodes} nodes needed, budget is {budget}")]
    BudgetExceeded { nodes: u128, budget: u128 },

    #[error("episode (seed {seed}) failed at step {step}: {source}")]
    Episode {
        seed: u64,
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("config: {0}")]
    Config(String),
}

fn format_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}
