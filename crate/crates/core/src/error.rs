use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown function id `{0}`")]
    UnknownFunction(String),
    #[error("invalid dimension {0}: at least 2 is required")]
    InvalidDimension(usize),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("initial mean lies outside the search box")]
    InvalidMean,
    #[error("the CMA-ES state has already stopped ({0})")]
    AlreadyStopped(crate::cma::StopReason),
    #[error("population of {got} points is smaller than the parent count {mu}")]
    InsufficientPopulation { got: usize, mu: usize },
    #[error("infeasible initialization: {0}")]
    InfeasibleInitialization(String),
    #[error("cannot update a tabu center from an empty population")]
    NoPopulation,
    #[error("portfolio is empty")]
    EmptyPortfolio,
    #[error("batch is empty")]
    EmptyBatch,
    #[error("{}, line {line}: {msg}", path.display())]
    Parse {
        path: PathBuf,
        line: u64,
        msg: String,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
