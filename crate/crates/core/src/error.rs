use thiserror::Error;

/// Errors raised by the planning library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid cost: {0}")]
    InvalidCost(f64),

    #[error("empty prolate hyperspheroid: transverse diameter {transverse} < focal distance {focal}")]
    EmptyHyperspheroid { transverse: f64, focal: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("malformed problem document: {0}")]
    Document(String),

    #[error("vertex {0} is already indexed")]
    DuplicateVertex(usize),

    #[error("unknown or removed vertex {0}")]
    UnknownVertex(usize),

    #[error("nearest-neighbour query on an empty index")]
    EmptyIndex,

    #[error("rewiring vertex {child} under {new_parent} would create a cycle")]
    Cycle { child: usize, new_parent: usize },

    #[error("sampling budget of {attempts} draws exhausted (informed region barely overlaps the bounds)")]
    SampleBudgetExhausted { attempts: usize },

    #[error("path is not collision free: {0}")]
    InfeasiblePath(String),

    #[error("grid too coarse: narrowest passage {passage:.4} spans fewer than 3 cells of width {cell:.4}")]
    GridTooCoarse { passage: f64, cell: f64 },

    #[error("homotopy precondition violated: {0}")]
    HomotopyMismatch(String),

    #[error("no path exists on the grid oracle")]
    NoOraclePath,
}

pub type Result<T> = std::result::Result<T, Error>;
